//! Line streaming over plain, bzip2 and gzip dump files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use bzip2::read::MultiBzDecoder;
use flate2::read::MultiGzDecoder;

pub const DEFAULT_READ_WINDOW: usize = 64 << 20;
pub const DEFAULT_MAX_LINE: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codec {
    None,
    Bzip2,
    Gzip,
}

impl Codec {
    /// Sniffs the codec from the first bytes of a file.
    pub fn detect(magic: &[u8]) -> Codec {
        if magic.starts_with(b"BZh") {
            Codec::Bzip2
        } else if magic.starts_with(&[0x1f, 0x8b]) {
            Codec::Gzip
        } else {
            Codec::None
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("dump not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("corrupt compressed stream near compressed byte offset {offset}: {source}")]
    Codec { offset: u64, source: io::Error },
    #[error("line {line} exceeds the maximum line length of {max} bytes")]
    LineTooLong { line: u64, max: usize },
    #[error("I/O error reading dump: {0}")]
    Io(#[from] io::Error),
}

/// A dump file plus how to read it. `codec: None` means auto-detect.
#[derive(Debug, Clone)]
pub struct DumpSource {
    pub path: PathBuf,
    pub codec: Option<Codec>,
    pub read_window: usize,
    pub max_line: usize,
}

impl DumpSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            codec: None,
            read_window: DEFAULT_READ_WINDOW,
            max_line: DEFAULT_MAX_LINE,
        }
    }

    pub fn with_codec(mut self, codec: Option<Codec>) -> Self {
        self.codec = codec;
        self
    }

    pub fn with_read_window(mut self, bytes: usize) -> Self {
        self.read_window = bytes.max(1);
        self
    }

    pub fn with_max_line(mut self, bytes: usize) -> Self {
        self.max_line = bytes;
        self
    }
}

/// Compressed-side position and error provenance, shared with the decoder wrapper.
#[derive(Default)]
struct InputState {
    offset: AtomicU64,
    io_failed: AtomicBool,
}

struct CountingReader<R> {
    inner: R,
    state: Arc<InputState>,
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        match self.inner.read(buf) {
            Ok(n) => {
                self.state.offset.fetch_add(n as u64, Ordering::Relaxed);
                Ok(n)
            }
            Err(e) => {
                if e.kind() != io::ErrorKind::Interrupted {
                    self.state.io_failed.store(true, Ordering::Relaxed);
                }
                Err(e)
            }
        }
    }
}

/// Marks decoder failures so the line reader can report them as codec errors.
#[derive(Debug)]
struct CodecFailure {
    offset: u64,
    source: io::Error,
}

impl std::fmt::Display for CodecFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "offset {}: {}", self.offset, self.source)
    }
}

impl std::error::Error for CodecFailure {}

struct DecoderReader<R> {
    inner: R,
    state: Arc<InputState>,
}

impl<R: Read> Read for DecoderReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.inner.read(buf).map_err(|e| {
            if e.kind() == io::ErrorKind::Interrupted || self.state.io_failed.load(Ordering::Relaxed)
            {
                e
            } else {
                let offset = self.state.offset.load(Ordering::Relaxed);
                io::Error::other(CodecFailure { offset, source: e })
            }
        })
    }
}

/// Physical lines of a dump, without their `\n` terminator.
pub struct LineReader {
    reader: BufReader<Box<dyn Read + Send>>,
    max_line: usize,
    line_no: u64,
    done: bool,
}

impl LineReader {
    pub fn from_reader(reader: impl Read + Send + 'static, read_window: usize, max_line: usize) -> Self {
        Self {
            reader: BufReader::with_capacity(read_window.max(1), Box::new(reader)),
            max_line,
            line_no: 0,
            done: false,
        }
    }

    /// Number of lines yielded so far.
    pub fn lines_read(&self) -> u64 {
        self.line_no
    }

    /// Appends the next line to `buf`. Returns `false` at end of input.
    pub fn read_line_into(&mut self, buf: &mut Vec<u8>) -> Result<bool, DumpError> {
        if self.done {
            return Ok(false);
        }
        let start = buf.len();
        loop {
            let available = match self.reader.fill_buf() {
                Ok(b) => b,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => {
                    self.done = true;
                    return Err(classify(e));
                }
            };
            if available.is_empty() {
                self.done = true;
                if buf.len() > start {
                    self.line_no += 1;
                    return Ok(true);
                }
                return Ok(false);
            }
            let (take, found) = match memchr::memchr(b'\n', available) {
                Some(i) => (i + 1, true),
                None => (available.len(), false),
            };
            let content = if found { take - 1 } else { take };
            if buf.len() - start + content > self.max_line {
                self.done = true;
                return Err(DumpError::LineTooLong {
                    line: self.line_no + 1,
                    max: self.max_line,
                });
            }
            buf.extend_from_slice(&available[..content]);
            self.reader.consume(take);
            if found {
                self.line_no += 1;
                return Ok(true);
            }
        }
    }
}

fn classify(e: io::Error) -> DumpError {
    if e.get_ref().is_some_and(|inner| inner.is::<CodecFailure>()) {
        let failure = e
            .into_inner()
            .and_then(|inner| inner.downcast::<CodecFailure>().ok())
            .expect("checked above");
        DumpError::Codec {
            offset: failure.offset,
            source: failure.source,
        }
    } else {
        DumpError::Io(e)
    }
}

impl Iterator for LineReader {
    type Item = Result<Vec<u8>, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = Vec::new();
        match self.read_line_into(&mut buf) {
            Ok(true) => Some(Ok(buf)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

/// Opens a dump for line iteration, decompressing per the source's codec.
pub fn open_dump(source: &DumpSource) -> Result<LineReader, DumpError> {
    let mut file = open_file(&source.path)?;
    let codec = match source.codec {
        Some(c) => c,
        None => {
            let mut magic = [0u8; 3];
            let n = read_prefix(&mut file, &mut magic)?;
            let codec = Codec::detect(&magic[..n]);
            file = open_file(&source.path)?;
            codec
        }
    };
    let state = Arc::new(InputState::default());
    let counted = CountingReader {
        inner: BufReader::with_capacity(1 << 20, file),
        state: Arc::clone(&state),
    };
    let reader: Box<dyn Read + Send> = match codec {
        Codec::None => Box::new(counted),
        Codec::Bzip2 => Box::new(DecoderReader {
            inner: MultiBzDecoder::new(counted),
            state,
        }),
        Codec::Gzip => Box::new(DecoderReader {
            inner: MultiGzDecoder::new(counted),
            state,
        }),
    };
    Ok(LineReader::from_reader(reader, source.read_window, source.max_line))
}

fn open_file(path: &Path) -> Result<File, DumpError> {
    File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => DumpError::NotFound(path.to_path_buf()),
        _ => DumpError::Io(e),
    })
}

fn read_prefix(file: &mut File, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match file.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}
