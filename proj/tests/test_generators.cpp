#include <doctest.h>

TEST_CASE("placeholder-generators") { CHECK(true); }
