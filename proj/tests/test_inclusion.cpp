#include <catch2/catch_amalgamated.hpp>
#include "ipwres/ipwres.hpp"
