//! Byte-stream transports: TCP, or an in-memory duplex pipe for tests.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::sync::{Arc, Condvar, Mutex};

/// Closes both directions of a connection, waking any blocked reader.
pub type Closer = Box<dyn Fn() + Send + Sync>;

/// A reliable ordered duplex byte stream, split into halves that can live
/// on different threads.
pub struct Connection {
    pub reader: Box<dyn Read + Send>,
    pub writer: Box<dyn Write + Send>,
    pub closer: Closer,
}

impl Connection {
    pub fn tcp(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        let closer = stream.try_clone()?;
        Ok(Connection {
            reader: Box::new(reader),
            writer: Box::new(stream),
            closer: Box::new(move || {
                let _ = closer.shutdown(Shutdown::Both);
            }),
        })
    }

    /// Two connected ends of an in-memory pipe.
    pub fn pipe() -> (Connection, Connection) {
        let a_to_b = Arc::new(Pipe::default());
        let b_to_a = Arc::new(Pipe::default());
        (Self::end(&b_to_a, &a_to_b), Self::end(&a_to_b, &b_to_a))
    }

    fn end(incoming: &Arc<Pipe>, outgoing: &Arc<Pipe>) -> Connection {
        let (i, o) = (incoming.clone(), outgoing.clone());
        Connection {
            reader: Box::new(PipeReader(incoming.clone())),
            writer: Box::new(PipeWriter(outgoing.clone())),
            closer: Box::new(move || {
                i.close_reader();
                o.close_writer();
            }),
        }
    }

    pub fn close(&self) {
        (self.closer)()
    }
}

#[derive(Default)]
struct PipeState {
    data: VecDeque<u8>,
    writer_closed: bool,
    reader_closed: bool,
}

#[derive(Default)]
struct Pipe {
    state: Mutex<PipeState>,
    ready: Condvar,
}

impl Pipe {
    fn close_writer(&self) {
        self.state.lock().unwrap().writer_closed = true;
        self.ready.notify_all();
    }

    fn close_reader(&self) {
        let mut s = self.state.lock().unwrap();
        s.reader_closed = true;
        s.data.clear();
        self.ready.notify_all();
    }
}

struct PipeReader(Arc<Pipe>);

impl Read for PipeReader {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        let mut s = self.0.state.lock().unwrap();
        while s.data.is_empty() && !s.writer_closed && !s.reader_closed {
            s = self.0.ready.wait(s).unwrap();
        }
        let n = buf.len().min(s.data.len());
        for (dst, src) in buf.iter_mut().zip(s.data.drain(..n)) {
            *dst = src;
        }
        Ok(n)
    }
}

impl Drop for PipeReader {
    fn drop(&mut self) {
        self.0.close_reader();
    }
}

struct PipeWriter(Arc<Pipe>);

impl Write for PipeWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let mut s = self.0.state.lock().unwrap();
        if s.reader_closed || s.writer_closed {
            return Err(io::ErrorKind::BrokenPipe.into());
        }
        s.data.extend(buf);
        self.0.ready.notify_all();
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Drop for PipeWriter {
    fn drop(&mut self) {
        self.0.close_writer();
    }
}

#[cfg(test)]
mod tests {
    use std::thread;

    use super::*;

    #[test]
    fn pipe_carries_bytes_both_ways() {
        let (mut a, mut b) = Connection::pipe();
        a.writer.write_all(b"ping").unwrap();
        let mut buf = [0; 4];
        b.reader.read_exact(&mut buf).unwrap();
        assert_eq!(&buf, b"ping");
        b.writer.write_all(b"pong").unwrap();
        a.reader.read_exact(&mut buf).unwrap();
        assert_eq!(&buf, b"pong");
    }

    #[test]
    fn close_wakes_blocked_reader() {
        let (a, b) = Connection::pipe();
        let Connection { mut reader, closer, .. } = b;
        let t = thread::spawn(move || reader.read(&mut [0; 8]).unwrap());
        thread::sleep(std::time::Duration::from_millis(20));
        closer();
        assert_eq!(t.join().unwrap(), 0);
        drop(a);
    }

    #[test]
    fn dropping_writer_is_eof_and_dropping_reader_breaks_pipe() {
        let (a, mut b) = Connection::pipe();
        let Connection { reader, writer, .. } = a;
        drop(writer);
        assert_eq!(b.reader.read(&mut [0; 8]).unwrap(), 0);
        drop(reader);
        assert_eq!(b.writer.write(b"x").unwrap_err().kind(), io::ErrorKind::BrokenPipe);
    }

    #[test]
    fn tcp_loopback() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let t = thread::spawn(move || {
            let mut c = Connection::tcp(listener.accept().unwrap().0).unwrap();
            let mut buf = [0; 3];
            c.reader.read_exact(&mut buf).unwrap();
            c.writer.write_all(&buf).unwrap();
        });
        let mut c = Connection::tcp(TcpStream::connect(addr).unwrap()).unwrap();
        c.writer.write_all(b"abc").unwrap();
        let mut buf = [0; 3];
        c.reader.read_exact(&mut buf).unwrap();
        assert_eq!(&buf, b"abc");
        t.join().unwrap();
    }
}
