//! stdout helpers that exit quietly when the consumer closes the pipe
//! (`batd ... | head` must not panic).

use std::io::{self, Write};

pub fn line(args: std::fmt::Arguments<'_>) {
    emit(args, true);
}

pub fn raw(args: std::fmt::Arguments<'_>) {
    emit(args, false);
}

fn emit(args: std::fmt::Arguments<'_>, newline: bool) {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let res = lock
        .write_fmt(args)
        .and_then(|_| if newline { lock.write_all(b"\n") } else { Ok(()) })
        .and_then(|_| lock.flush());
    if let Err(e) = res {
        if e.kind() == io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

macro_rules! sayln {
    ($($t:tt)*) => { $crate::out::line(format_args!($($t)*)) };
}

macro_rules! say {
    ($($t:tt)*) => { $crate::out::raw(format_args!($($t)*)) };
}

pub(crate) use {say, sayln};
