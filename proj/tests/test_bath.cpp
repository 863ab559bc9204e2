#include <doctest.h>

TEST_CASE("placeholder-bath") { CHECK(true); }
