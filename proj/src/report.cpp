#include "skew/extended.hpp"
