//! Thin executable wrapper around [`starfas::cli`].

fn main() {
    std::process::exit(starfas::cli::run(std::env::args_os()));
}
