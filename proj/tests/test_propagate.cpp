#include <doctest.h>

TEST_CASE("placeholder-propagate") { CHECK(true); }
