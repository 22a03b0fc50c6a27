#include <doctest.h>

TEST_SUITE("semantic_fusion") {}
