#include "doctest.h"

#include "eventline/harness.hpp"
