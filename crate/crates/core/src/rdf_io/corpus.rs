use std::io::{self, BufRead, Write};

use crate::walks::WalkCorpus;

/// Writes one walk per line with tokens separated by single spaces.
pub fn write_corpus(corpus: &WalkCorpus, mut sink: impl Write) -> io::Result<()> {
    for seq in corpus.sequences() {
        let mut first = true;
        for tok in seq {
            if !first {
                sink.write_all(b" ")?;
            }
            first = false;
            sink.write_all(tok.as_bytes())?;
        }
        sink.write_all(b"\n")?;
    }
    sink.flush()
}

/// Reads a corpus written by [`write_corpus`]. Blank lines are skipped.
pub fn read_corpus(source: impl BufRead) -> io::Result<WalkCorpus> {
    let mut corpus = WalkCorpus::new();
    for line in source.lines() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        corpus.push(line.split(' ').filter(|t| !t.is_empty()));
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_walk_line() {
        let mut c = WalkCorpus::new();
        c.push([":a", ":r", ":b"]);
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), ":a :r :b\n");
    }

    #[test]
    fn empty_corpus_empty_file() {
        let mut buf = Vec::new();
        write_corpus(&WalkCorpus::new(), &mut buf).unwrap();
        assert!(buf.is_empty());
        assert!(read_corpus(&b""[..]).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn read_write_identity(seqs in proptest::collection::vec(
            proptest::collection::vec("[a-z<>|:\"]{1,5}", 1..6), 0..8)) {
            let mut c = WalkCorpus::new();
            for s in &seqs {
                c.push(s.iter());
            }
            let mut buf = Vec::new();
            write_corpus(&c, &mut buf).unwrap();
            let back = read_corpus(&buf[..]).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
