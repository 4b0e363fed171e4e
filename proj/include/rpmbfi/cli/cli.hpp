// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace rpmbfi::cli {

/// Exit codes: 0 done, 1 attack failed / rpmb op failed, 2 config error,
/// 3 invariant violation detected mid-run.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rpmbfi::cli
