#include <doctest.h>

TEST_SUITE("label_prop") {}
