#include <doctest.h>

TEST_SUITE("camera") {}
