// Copyright rpmbfi contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "rpmbfi/cli/cli.hpp"

int main(int argc, char** argv) { return rpmbfi::cli::run(argc, argv, std::cout, std::cerr); }
