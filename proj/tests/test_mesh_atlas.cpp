#include <doctest.h>

TEST_SUITE("mesh_atlas") {}
