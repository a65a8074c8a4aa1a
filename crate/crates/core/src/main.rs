// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(robustctl::cli::run(std::env::args_os()));
}
