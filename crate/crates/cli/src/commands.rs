//! Stream command files: `A <item>` for an arrival, `Q` for a query,
//! `#` for comments. Blank lines are ignored.

use std::io::{BufRead, Write};

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Arrive(u64),
    Query,
}

/// Parse one line; `None` for comments and blank lines.
pub fn parse_line(line: &str, lineno: usize) -> Result<Option<Command>> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let mut parts = line.split_whitespace();
    let cmd = match parts.next() {
        Some("A") => {
            let item = parts
                .next()
                .with_context(|| format!("line {lineno}: arrival without an item"))?;
            let item = item
                .parse::<u64>()
                .with_context(|| format!("line {lineno}: bad item id {item:?}"))?;
            Command::Arrive(item)
        }
        Some("Q") => Command::Query,
        Some(other) => bail!("line {lineno}: unknown command {other:?}"),
        None => unreachable!("non-empty line has a first token"),
    };
    if let Some(extra) = parts.next() {
        bail!("line {lineno}: unexpected trailing token {extra:?}");
    }
    Ok(Some(cmd))
}

/// Commands of a reader, in order, with 1-based line numbers in errors.
pub fn read_commands<R: BufRead>(input: R) -> impl Iterator<Item = Result<(usize, Command)>> {
    input.lines().enumerate().filter_map(|(i, line)| {
        let lineno = i + 1;
        match line.with_context(|| format!("line {lineno}: read failed")) {
            Err(e) => Some(Err(e)),
            Ok(l) => parse_line(&l, lineno).transpose().map(|r| r.map(|c| (lineno, c))),
        }
    })
}

/// A generated stream: header comment lines followed by commands.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamFile {
    pub header: Vec<String>,
    pub commands: Vec<Command>,
}

impl StreamFile {
    pub fn arrivals(&self) -> impl Iterator<Item = u64> + '_ {
        self.commands.iter().filter_map(|c| match c {
            Command::Arrive(x) => Some(*x),
            Command::Query => None,
        })
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for h in &self.header {
            writeln!(out, "# {h}")?;
        }
        for c in &self.commands {
            match c {
                Command::Arrive(x) => writeln!(out, "A {x}")?,
                Command::Query => writeln!(out, "Q")?,
            }
        }
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_commands() {
        assert_eq!(parse_line("A 5", 1).unwrap(), Some(Command::Arrive(5)));
        assert_eq!(parse_line("  Q ", 1).unwrap(), Some(Command::Query));
        assert_eq!(parse_line("# hi", 1).unwrap(), None);
        assert_eq!(parse_line("", 1).unwrap(), None);
    }

    #[test]
    fn errors_carry_line_numbers() {
        for bad in ["A", "A x", "B 3", "Q 1", "A -1"] {
            let e = parse_line(bad, 7).unwrap_err().to_string();
            assert!(e.starts_with("line 7"), "{e}");
        }
    }

    #[test]
    fn reader_skips_comments() {
        let text = "# c\nA 1\n\nQ\n";
        let cmds: Vec<_> = read_commands(text.as_bytes()).map(|r| r.unwrap()).collect();
        assert_eq!(cmds, vec![(2, Command::Arrive(1)), (4, Command::Query)]);
    }

    #[test]
    fn write_round_trip() {
        let f = StreamFile {
            header: vec!["uniform length=2".into()],
            commands: vec![Command::Arrive(3), Command::Arrive(4), Command::Query],
        };
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let back: Vec<Command> = read_commands(&buf[..]).map(|r| r.unwrap().1).collect();
        assert_eq!(back, f.commands);
    }
}
