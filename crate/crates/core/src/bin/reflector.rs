//! UDP echo reflector for `delaybw probe --method udp`.

use std::net::UdpSocket;
use std::sync::atomic::AtomicBool;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "delaybw-reflector",
    version,
    about = "Echo every UDP datagram back to its sender"
)]
struct Args {
    /// Address to listen on
    #[arg(long, default_value = "0.0.0.0:7007")]
    bind: String,
}

fn main() {
    let args = Args::parse();
    let socket = match UdpSocket::bind(&args.bind) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot bind {}: {e}", args.bind);
            std::process::exit(1);
        }
    };
    eprintln!(
        "reflecting on {}",
        socket.local_addr().map(|a| a.to_string()).unwrap_or(args.bind)
    );
    let stop = AtomicBool::new(false);
    if let Err(e) = delaybw::probe::serve_reflector(&socket, &stop) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
