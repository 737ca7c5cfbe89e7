// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(fibosc::cli::run(std::env::args_os()));
}
