//! TCP transport. The server reads each connection on its own thread and
//! funnels frames through a channel into a single event loop that owns the
//! coordinator; the client drives one federate from the calling thread.

use std::collections::BTreeMap;
use std::io::{self, BufReader, BufWriter};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc;
use std::thread;

use log::{debug, info, warn};
use thiserror::Error;

use super::coordinator::{ConnId, Coordinator};
use super::driver::{DriverError, FederateDriver};
use super::protocol::{read_frame, send, ErrorCode, Message};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed frame: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error("coordinator closed the connection")]
    Closed,
}

enum Event {
    Connected(ConnId, TcpStream),
    Frame(ConnId, Vec<u8>),
    Closed(ConnId),
}

/// When the server stops accepting work.
#[derive(Debug, Clone, Copy)]
pub struct ServePolicy {
    /// Stop once this many executions completed and every role federate
    /// has left.
    pub executions: u32,
}

fn spawn_reader(conn: ConnId, stream: TcpStream, tx: mpsc::Sender<Event>) {
    thread::spawn(move || {
        let mut reader = BufReader::new(stream);
        loop {
            match read_frame(&mut reader) {
                Ok(Some(bytes)) => {
                    if tx.send(Event::Frame(conn, bytes)).is_err() {
                        break;
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    debug!("connection {conn} read failed: {e}");
                    break;
                }
            }
        }
        let _ = tx.send(Event::Closed(conn));
    });
}

/// Serves the coordinator on `listener` until the policy is met, then
/// returns it with its completed executions.
pub fn serve(listener: TcpListener, mut coordinator: Coordinator, policy: ServePolicy) -> Result<Coordinator, TransportError> {
    let (tx, rx) = mpsc::channel();
    let accept_tx = tx.clone();
    info!("coordinator listening on {}", listener.local_addr()?);
    thread::spawn(move || {
        for (next, stream) in (0 as ConnId..).zip(listener.incoming()) {
            match stream {
                Ok(s) => {
                    let _ = s.set_nodelay(true);
                    match s.try_clone() {
                        Ok(read) => {
                            if accept_tx.send(Event::Connected(next, s)).is_err() {
                                break;
                            }
                            spawn_reader(next, read, accept_tx.clone());
                        }
                        Err(e) => warn!("cannot clone stream: {e}"),
                    }
                }
                Err(e) => warn!("accept failed: {e}"),
            }
        }
    });
    drop(tx);

    let mut writers: BTreeMap<ConnId, BufWriter<TcpStream>> = BTreeMap::new();
    let mut joined_any = false;
    for event in rx {
        let out = match event {
            Event::Connected(conn, stream) => {
                writers.insert(conn, BufWriter::new(stream));
                continue;
            }
            Event::Frame(conn, bytes) => match Message::from_json(&bytes) {
                Ok(msg) => coordinator.handle(conn, msg),
                Err(e) => {
                    if let Some(w) = writers.get_mut(&conn) {
                        let _ = send(w, &Message::error("", ErrorCode::Malformed, e.to_string()));
                    }
                    continue;
                }
            },
            Event::Closed(conn) => {
                if let Some(w) = writers.remove(&conn) {
                    let _ = w.get_ref().shutdown(Shutdown::Both);
                }
                coordinator.disconnect(conn)
            }
        };
        for o in out {
            if let Some(w) = writers.get_mut(&o.conn) {
                if let Err(e) = send(w, &o.message) {
                    warn!("write to connection {} failed: {e}", o.conn);
                }
            }
        }
        joined_any |= coordinator.role_members() > 0;
        if joined_any && coordinator.role_members() == 0 && coordinator.exchanges() >= policy.executions {
            break;
        }
    }
    for w in writers.values() {
        let _ = w.get_ref().shutdown(Shutdown::Both);
    }
    Ok(coordinator)
}

/// Connects a driver to a coordinator and runs it until it resigns.
pub fn run_federate(addr: impl ToSocketAddrs, mut driver: FederateDriver) -> Result<FederateDriver, TransportError> {
    let stream = TcpStream::connect(addr)?;
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    send(&mut writer, &driver.join())?;
    while !driver.is_done() {
        let Some(bytes) = read_frame(&mut reader)? else {
            return Err(TransportError::Closed);
        };
        let msg = Message::from_json(&bytes)?;
        for reply in driver.on_message(&msg)? {
            send(&mut writer, &reply)?;
        }
    }
    info!("{} resigned", driver.id());
    Ok(driver)
}
