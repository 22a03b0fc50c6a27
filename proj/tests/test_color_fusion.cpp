#include <doctest.h>

TEST_SUITE("color_fusion") {}
