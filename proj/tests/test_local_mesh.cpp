#include <doctest.h>

TEST_SUITE("local_mesh") {}
