use std::process::ExitCode;

fn main() -> ExitCode {
    let (code, report) = tsogame::cli::run(std::env::args_os());
    if code == 2 || code == 3 {
        eprint!("{report}");
    } else {
        print!("{report}");
    }
    ExitCode::from(code as u8)
}
