use clap::Parser;

fn main() {
    let cli = rbsim_cli::Cli::parse();
    match rbsim_cli::run(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("rbsim: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
