#include <doctest.h>

TEST_SUITE("sparse_texture") {}
