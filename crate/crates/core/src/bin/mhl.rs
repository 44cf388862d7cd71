use clap::Parser;

fn main() -> std::process::ExitCode {
    mhl::cli::main_with(mhl::cli::Cli::parse())
}
