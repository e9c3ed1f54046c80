use secure_sum_lab::cli;

fn main() {
    std::process::exit(cli::main());
}
