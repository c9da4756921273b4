#include <catch2/catch_amalgamated.hpp>
#include "lqrl/lqrl.hpp"
TEST_CASE("placeholder test_pg") { CHECK(true); }
