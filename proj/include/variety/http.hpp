#pragma once

// Eigen goes first: <resolv.h>, pulled in by httplib, defines a `_res` macro
// that collides with Eigen parameter names.
#include <Eigen/Dense>

#include <httplib.h>
