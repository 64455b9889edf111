use clap::Parser;

fn main() {
    // default SIGPIPE disposition so `actkit list | head` terminates quietly
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = actkit_cli::Cli::parse();
    if let Err(e) = actkit_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code as i32);
    }
}
