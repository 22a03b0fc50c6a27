#include <doctest.h>

TEST_SUITE("evaluation") {}
