#include "mpc/ring.hpp"

// Header-only; this TU anchors the target.
