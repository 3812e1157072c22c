// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// glibc's resolv.h (reached through httplib's socket headers) defines _res
// as a macro, which collides with Eigen's kernel parameter names when this
// header lands first in a translation unit. Include httplib only through
// this wrapper.
#include "httplib.h"
#ifdef _res
#undef _res
#endif
