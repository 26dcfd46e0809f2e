//! Line-oriented pulse-sequence language.
//!
//! One statement per line, `#` comments, `key=value` arguments. Frequencies
//! are ordinary frequencies (Hz, kHz, MHz) and are kept that way inside the
//! schedule; angles accept `deg` and `rad`; times `s`, `ms`, `us`, `ns`;
//! fields `G`, `mG`, `uG`.
//!
//! ```text
//! # transfer, dress, manipulate, undress, read out
//! mw plus pi rabi=42kHz
//! stirap enter tw=450us toff=356us peak=25kHz
//! hold 10ms mw=16.2kHz {
//!     rf pi/2 rabi=2.687kHz phase=0deg
//! }
//! stirap exit tw=450us toff=356us peak=25kHz
//! mw minus pi rabi=42kHz
//! measure
//! ```
//!
//! Parsing is total: every input produces either a schedule or at least one
//! error diagnostic with line and column, never both and never a panic.

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{second_order_zeeman, PhysicalConstants, RfMode};
use crate::pulses::{
    hold, mw_pulse, stirap_half, with_rf, PulseAngle, Schedule, Segment, SegmentKind,
    SettingValue, StirapDirection, Transition,
};
use crate::scalar::Float;

/// Sequence text plus the name used in diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSource {
    pub name: String,
    pub text: String,
}

impl SequenceSource {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based line.
    pub line: usize,
    /// 1-based character column.
    pub column: usize,
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, sev, self.message)
    }
}

/// Result of a parse. `schedule` is present exactly when no error-severity
/// diagnostic was produced; warnings do not block schedule production.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutput<T: Float> {
    pub schedule: Option<Schedule<T>>,
    pub diagnostics: Vec<Diagnostic>,
}

impl<T: Float> ParseOutput<T> {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Time,
    Frequency,
    Angle,
    Field,
    Bare,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Time => "time (s, ms, us, ns)",
            Dimension::Frequency => "frequency (Hz, kHz, MHz)",
            Dimension::Angle => "angle (deg, rad)",
            Dimension::Field => "field (G, mG, uG)",
            Dimension::Bare => "bare number",
        }
    }
}

fn unit_table(unit: &str) -> Option<(f64, Dimension)> {
    Some(match unit {
        "s" => (1.0, Dimension::Time),
        "ms" => (1e-3, Dimension::Time),
        "us" => (1e-6, Dimension::Time),
        "ns" => (1e-9, Dimension::Time),
        "Hz" => (1.0, Dimension::Frequency),
        "kHz" => (1e3, Dimension::Frequency),
        "MHz" => (1e6, Dimension::Frequency),
        "rad" => (1.0, Dimension::Angle),
        "deg" => (std::f64::consts::PI / 180.0, Dimension::Angle),
        "G" => (1.0, Dimension::Field),
        "mG" => (1e-3, Dimension::Field),
        "uG" => (1e-6, Dimension::Field),
        "" => (1.0, Dimension::Bare),
        _ => return None,
    })
}

/// Parse `9.8G`, `342kHz`, `90deg`, `1e-3s`, `0.5`. The numeric prefix is
/// the longest leading substring that parses as a float.
fn parse_quantity(text: &str) -> Result<(f64, Dimension), String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut best: Option<(f64, usize)> = None;
    for k in 1..=chars.len() {
        let end = if k == chars.len() {
            text.len()
        } else {
            chars[k].0
        };
        if let Ok(v) = text[..end].parse::<f64>() {
            best = Some((v, end));
        }
    }
    let Some((value, end)) = best else {
        return Err(format!("expected a number, found `{text}`"));
    };
    let unit = &text[end..];
    let Some((scale, dim)) = unit_table(unit) else {
        return Err(format!("unknown unit `{unit}`"));
    };
    if !value.is_finite() {
        return Err(format!("non-finite value `{text}`"));
    }
    Ok((value * scale, dim))
}

/// Parse a unit-suffixed scalar (`4uG`, `20us`, `342kHz`, `0.5`) into its
/// base-unit value (gauss, seconds, Hz, rad).
pub fn parse_scalar(text: &str) -> Result<f64, String> {
    parse_quantity(text).map(|(v, _)| v)
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start_col = 0usize;
    for (col, ch) in line.chars().enumerate() {
        if ch == '#' {
            break;
        }
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(Token {
                    text: std::mem::take(&mut current),
                    column: start_col + 1,
                });
            }
        } else {
            if current.is_empty() {
                start_col = col;
            }
            current.push(ch);
        }
    }
    if !current.is_empty() {
        tokens.push(Token {
            text: current,
            column: start_col + 1,
        });
    }
    tokens
}

struct LineParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, column: usize, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            line: self.line,
            column,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn end_column(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.column + t.text.chars().count())
            .unwrap_or(1)
    }

    /// Positional quantity of the expected dimension.
    fn quantity(&mut self, what: &str, dim: Dimension) -> Result<f64, Diagnostic> {
        let col = self.peek().map(|t| t.column).unwrap_or(self.end_column());
        let Some(tok) = self.next() else {
            return Err(self.err(col, format!("expected {what}")));
        };
        let (value, got) = parse_quantity(&tok.text).map_err(|e| self.err(tok.column, e))?;
        if got != dim && got != Dimension::Bare {
            return Err(self.err(
                tok.column,
                format!("{what} must be a {}, found {}", dim.name(), got.name()),
            ));
        }
        Ok(value)
    }

    /// `key=value` argument; returns (value, column).
    fn named(
        &mut self,
        key: &str,
        dim: Dimension,
        required: bool,
    ) -> Result<Option<(f64, usize)>, Diagnostic> {
        let prefix = format!("{key}=");
        match self.peek() {
            Some(tok) if tok.text.starts_with(&prefix) => {
                let column = tok.column;
                let text = tok.text[prefix.len()..].to_string();
                self.pos += 1;
                if text.is_empty() {
                    return Err(self.err(column, format!("`{key}=` is missing a value")));
                }
                let (value, got) =
                    parse_quantity(&text).map_err(|e| self.err(column, e))?;
                if got != dim && got != Dimension::Bare {
                    return Err(self.err(
                        column,
                        format!("{key} must be a {}, found {}", dim.name(), got.name()),
                    ));
                }
                Ok(Some((value, column)))
            }
            Some(tok) if required => Err(self.err(
                tok.column,
                format!("expected `{key}=...`, found `{}`", tok.text),
            )),
            None if required => Err(self.err(self.end_column(), format!("expected `{key}=...`"))),
            _ => Ok(None),
        }
    }

    fn finish(&mut self) -> Result<(), Diagnostic> {
        match self.peek() {
            Some(tok) => Err(self.err(
                tok.column,
                format!("unexpected trailing `{}`", tok.text),
            )),
            None => Ok(()),
        }
    }
}

fn parse_angle_token<T: Float>(
    p: &mut LineParser,
    what: &str,
) -> Result<PulseAngle<T>, Diagnostic> {
    let col = p.peek().map(|t| t.column).unwrap_or(p.end_column());
    let Some(tok) = p.next() else {
        return Err(p.err(col, format!("expected {what}: pi, pi/2 or dur=<time>")));
    };
    match tok.text.as_str() {
        "pi" => Ok(PulseAngle::Pi),
        "pi/2" => Ok(PulseAngle::HalfPi),
        t if t.starts_with("dur=") => {
            let column = tok.column;
            let (value, dim) =
                parse_quantity(&t["dur=".len()..]).map_err(|e| p.err(column, e))?;
            if dim != Dimension::Time && dim != Dimension::Bare {
                return Err(p.err(column, "dur must be a time (s, ms, us, ns)"));
            }
            Ok(PulseAngle::Duration(T::of(value)))
        }
        other => Err(p.err(
            tok.column,
            format!("expected pi, pi/2 or dur=<time>, found `{other}`"),
        )),
    }
}

struct PendingHold<T: Float> {
    segment: Segment<T>,
    line: usize,
    brace_column: usize,
}

/// Parse a sequence source into a schedule.
pub fn parse<T: Float>(src: &SequenceSource) -> ParseOutput<T> {
    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    let mut segments: Vec<Segment<T>> = Vec::new();
    let mut settings: Vec<(String, SettingValue<T>)> = Vec::new();
    let mut measured = false;
    let mut measured_line = 0usize;
    let mut pending_hold: Option<PendingHold<T>> = None;
    let mut rf_mode = RfMode::SinglePlus;
    let mut b_field = 9.80f64;
    let constants = PhysicalConstants::<f64>::ytterbium171();

    for (line_idx, raw_line) in src.text.lines().enumerate() {
        let line_no = line_idx + 1;
        let tokens = tokenize(raw_line);
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            tokens: &tokens,
            pos: 0,
            line: line_no,
        };

        if measured && pending_hold.is_none() {
            diagnostics.push(p.err(
                tokens[0].column,
                format!("statement after `measure` (line {measured_line}); measure must be last"),
            ));
            continue;
        }

        // Inside a hold block only rf statements and the closing brace are
        // allowed.
        if let Some(pending) = pending_hold.as_mut() {
            if tokens[0].text == "}" {
                let mut q = LineParser {
                    tokens: &tokens,
                    pos: 1,
                    line: line_no,
                };
                if let Err(d) = q.finish() {
                    diagnostics.push(d);
                }
                let done = pending_hold.take().unwrap();
                push_segment(&mut segments, done.segment);
                continue;
            }
            if tokens[0].text == "rf" {
                match parse_rf_statement(&mut p, rf_mode, pending.segment.clone()) {
                    Ok((segment, lint)) => {
                        pending.segment = segment;
                        if let Some((rabi_hz, column)) = lint {
                            rf_lint(
                                &mut diagnostics,
                                line_no,
                                column,
                                rabi_hz,
                                &pending.segment,
                                rf_mode,
                                b_field,
                                &constants,
                            );
                        }
                    }
                    Err(d) => diagnostics.push(d),
                }
                continue;
            }
            diagnostics.push(p.err(
                tokens[0].column,
                format!(
                    "expected an rf statement or `}}` closing the hold block opened at line {}, found `{}`",
                    pending.line, tokens[0].text
                ),
            ));
            continue;
        }

        let keyword = p.next().expect("non-empty token list");
        let result: Result<(), Diagnostic> = (|| {
            match keyword.text.as_str() {
                "set" => {
                    // `set key = value`, `set key=value` and mixtures.
                    let rest: Vec<&Token> = p.tokens[p.pos..].iter().collect();
                    let joined: String =
                        rest.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
                    p.pos = p.tokens.len();
                    let Some((key, value)) = joined.split_once('=') else {
                        return Err(p.err(
                            keyword.column,
                            "set statement needs the form `set key = value`",
                        ));
                    };
                    let key = key.trim();
                    let value = value.trim();
                    if value.is_empty() {
                        return Err(p.err(keyword.column, "set statement is missing a value"));
                    }
                    match key {
                        "B" => {
                            let (v, dim) = parse_quantity(value)
                                .map_err(|e| p.err(keyword.column, e))?;
                            if dim != Dimension::Field && dim != Dimension::Bare {
                                return Err(p.err(
                                    keyword.column,
                                    "B must be a field (G, mG, uG)",
                                ));
                            }
                            if v < 0.0 {
                                return Err(
                                    p.err(keyword.column, "B must not be negative")
                                );
                            }
                            b_field = v;
                            settings.push(("B".into(), SettingValue::Quantity(T::of(v))));
                        }
                        "rf_mode" => {
                            rf_mode = match value {
                                "single_plus" => RfMode::SinglePlus,
                                "single_minus" => RfMode::SingleMinus,
                                "dual_resonant" => RfMode::DualResonant,
                                other => {
                                    return Err(p.err(
                                        keyword.column,
                                        format!(
                                            "unknown rf_mode `{other}` (single_plus, \
                                             single_minus, dual_resonant)"
                                        ),
                                    ))
                                }
                            };
                            settings.push((
                                "rf_mode".into(),
                                SettingValue::Word(value.to_string()),
                            ));
                        }
                        other => {
                            return Err(p.err(
                                keyword.column,
                                format!("unknown setting `{other}` (known: B, rf_mode)"),
                            ))
                        }
                    }
                    Ok(())
                }
                "mw" => {
                    let col = p.peek().map(|t| t.column).unwrap_or(p.end_column());
                    let Some(tok) = p.next() else {
                        return Err(p.err(col, "expected a transition: plus, minus or clock"));
                    };
                    let transition = match tok.text.as_str() {
                        "plus" => Transition::Plus,
                        "minus" => Transition::Minus,
                        "clock" => Transition::Clock,
                        other => {
                            let column = tok.column;
                            return Err(p.err(
                                column,
                                format!("unknown transition `{other}` (plus, minus, clock)"),
                            ));
                        }
                    };
                    let angle = parse_angle_token::<T>(&mut p, "pulse area")?;
                    let (rabi_hz, rabi_col) = p
                        .named("rabi", Dimension::Frequency, true)?
                        .expect("required");
                    let phase = p.named("phase", Dimension::Angle, false)?;
                    p.finish()?;
                    let seg = mw_pulse(
                        transition,
                        T::of(rabi_hz),
                        T::of(phase.map(|(v, _)| v).unwrap_or(0.0)),
                        angle,
                    )
                    .map_err(|e| p.err(rabi_col, e.to_string()))?;
                    push_segment(&mut segments, seg);
                    Ok(())
                }
                "stirap" => {
                    let col = p.peek().map(|t| t.column).unwrap_or(p.end_column());
                    let Some(tok) = p.next() else {
                        return Err(p.err(col, "expected `enter` or `exit`"));
                    };
                    let direction = match tok.text.as_str() {
                        "enter" => StirapDirection::Enter,
                        "exit" => StirapDirection::Exit,
                        other => {
                            let column = tok.column;
                            return Err(p.err(
                                column,
                                format!("expected `enter` or `exit`, found `{other}`"),
                            ));
                        }
                    };
                    let (tw, tw_col) = p.named("tw", Dimension::Time, true)?.expect("required");
                    let (toff, _) = p.named("toff", Dimension::Time, true)?.expect("required");
                    let (peak, _) = p
                        .named("peak", Dimension::Frequency, true)?
                        .expect("required");
                    p.finish()?;
                    let seg = stirap_half(T::of(tw), T::of(toff), T::of(peak), direction)
                        .map_err(|e| p.err(tw_col, e.to_string()))?;
                    push_segment(&mut segments, seg);
                    Ok(())
                }
                "hold" => {
                    let duration = p.quantity("hold duration", Dimension::Time)?;
                    let (mw_hz, mw_col) =
                        p.named("mw", Dimension::Frequency, true)?.expect("required");
                    let seg = hold(T::of(duration), T::of(mw_hz))
                        .map_err(|e| p.err(mw_col, e.to_string()))?;
                    match p.peek().map(|t| t.text.as_str()) {
                        Some("{") => {
                            p.pos += 1;
                            p.finish()?;
                            pending_hold = Some(PendingHold {
                                segment: seg,
                                line: line_no,
                                brace_column: keyword.column,
                            });
                        }
                        Some("{}") => {
                            p.pos += 1;
                            p.finish()?;
                            push_segment(&mut segments, seg);
                        }
                        _ => {
                            p.finish()?;
                            push_segment(&mut segments, seg);
                        }
                    }
                    Ok(())
                }
                "rf" => Err(p.err(
                    keyword.column,
                    "rf statements are only allowed inside a hold block",
                )),
                "measure" => {
                    p.finish()?;
                    measured = true;
                    measured_line = line_no;
                    Ok(())
                }
                other => Err(p.err(
                    keyword.column,
                    format!(
                        "unknown keyword `{other}` (set, mw, stirap, hold, rf, measure)"
                    ),
                )),
            }
        })();
        if let Err(d) = result {
            diagnostics.push(d);
        }
    }

    if let Some(pending) = pending_hold {
        diagnostics.push(Diagnostic {
            line: pending.line,
            column: pending.brace_column,
            severity: Severity::Error,
            message: "hold block is never closed with `}`".into(),
        });
    }

    let has_errors = diagnostics.iter().any(|d| d.severity == Severity::Error);
    let schedule = if has_errors {
        None
    } else {
        Some(Schedule {
            segments,
            settings,
            measure_at_end: measured,
        })
    };
    ParseOutput {
        schedule,
        diagnostics,
    }
}

fn push_segment<T: Float>(segments: &mut Vec<Segment<T>>, seg: Segment<T>) {
    if seg.duration > T::zero() {
        segments.push(seg);
    }
}

type RfParseOk<T> = (Segment<T>, Option<(f64, usize)>);

fn parse_rf_statement<T: Float>(
    p: &mut LineParser,
    mode: RfMode,
    segment: Segment<T>,
) -> Result<RfParseOk<T>, Diagnostic> {
    let keyword = p.next().expect("rf keyword");
    let angle = parse_angle_token::<T>(p, "rf pulse area")?;
    let (rabi_hz, rabi_col) = p.named("rabi", Dimension::Frequency, true)?.expect("required");
    let (phase, _) = p.named("phase", Dimension::Angle, true)?.expect("required");
    let detune = p.named("detune", Dimension::Frequency, false)?;
    let at = p.named("at", Dimension::Time, false)?;
    p.finish()?;
    let _ = keyword;
    let segment = with_rf(
        segment,
        T::of(rabi_hz),
        T::of(phase),
        T::of(detune.map(|(v, _)| v).unwrap_or(0.0)),
        mode,
        T::of(at.map(|(v, _)| v).unwrap_or(0.0)),
        angle,
    )
    .map_err(|e| p.err(rabi_col, e.to_string()))?;
    Ok((segment, Some((rabi_hz, rabi_col))))
}

/// Single-field validity lint: Ω_rf must stay well under both |δω| and
/// Ω_μw for the one-field approximation to hold.
#[allow(clippy::too_many_arguments)]
fn rf_lint<T: Float>(
    diagnostics: &mut Vec<Diagnostic>,
    line: usize,
    column: usize,
    rabi_hz: f64,
    segment: &Segment<T>,
    mode: RfMode,
    b_field: f64,
    constants: &PhysicalConstants<f64>,
) {
    if mode == RfMode::DualResonant {
        return;
    }
    let delta_omega_hz =
        (second_order_zeeman(b_field, constants) / std::f64::consts::TAU).abs();
    let mw_hz = segment
        .mw_plus
        .peak_hz()
        .to_f64()
        .unwrap_or(0.0);
    let mut degraded = Vec::new();
    if delta_omega_hz > 0.0 && rabi_hz >= delta_omega_hz / 5.0 {
        degraded.push(format!("|δω|/2π = {delta_omega_hz:.3e} Hz"));
    }
    if mw_hz > 0.0 && rabi_hz >= mw_hz / 5.0 {
        degraded.push(format!("Ω_μw/2π = {mw_hz:.3e} Hz"));
    }
    if !degraded.is_empty() {
        diagnostics.push(Diagnostic {
            line,
            column,
            severity: Severity::Warning,
            message: format!(
                "rf Rabi frequency {:.3e} Hz is not small against {}; \
                 single-field approximation degraded",
                rabi_hz,
                degraded.join(" and ")
            ),
        });
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SerializeError {
    #[error("segment {index} was not built from sequence-language constructs")]
    Unrepresentable { index: usize },
}

fn format_angle(angle: PulseAngle<impl Float>) -> String {
    match angle {
        PulseAngle::Pi => "pi".into(),
        PulseAngle::HalfPi => "pi/2".into(),
        PulseAngle::Duration(d) => format!("dur={d}s"),
    }
}

/// Render a schedule back into sequence text. Values are written in base
/// units with shortest-round-trip formatting, so parsing the output
/// reproduces the schedule (and its control dump) exactly.
pub fn serialize<T: Float>(schedule: &Schedule<T>) -> Result<String, SerializeError> {
    let mut out = String::new();
    for (key, value) in &schedule.settings {
        match value {
            SettingValue::Quantity(v) => {
                let unit = if key == "B" { "G" } else { "" };
                out.push_str(&format!("set {key} = {v}{unit}\n"));
            }
            SettingValue::Word(w) => out.push_str(&format!("set {key} = {w}\n")),
        }
    }
    for (index, seg) in schedule.segments.iter().enumerate() {
        match &seg.kind {
            SegmentKind::MwPulse {
                transition,
                rabi_hz,
                phase,
                angle,
            } => {
                let name = match transition {
                    Transition::Plus => "plus",
                    Transition::Minus => "minus",
                    Transition::Clock => "clock",
                };
                out.push_str(&format!(
                    "mw {name} {} rabi={rabi_hz}Hz",
                    format_angle(*angle)
                ));
                if !phase.is_zero() {
                    out.push_str(&format!(" phase={phase}rad"));
                }
                out.push('\n');
            }
            SegmentKind::StirapHalf {
                direction,
                fwhm,
                t_off,
                peak_hz,
            } => {
                let name = match direction {
                    StirapDirection::Enter => "enter",
                    StirapDirection::Exit => "exit",
                };
                out.push_str(&format!(
                    "stirap {name} tw={fwhm}s toff={t_off}s peak={peak_hz}Hz\n"
                ));
            }
            SegmentKind::Hold { mw_hz } => {
                if seg.rf_windows.is_empty() {
                    out.push_str(&format!("hold {}s mw={mw_hz}Hz\n", seg.duration));
                } else {
                    out.push_str(&format!("hold {}s mw={mw_hz}Hz {{\n", seg.duration));
                    for w in &seg.rf_windows {
                        out.push_str(&format!(
                            "    rf {} rabi={}Hz phase={}rad",
                            format_angle(w.angle),
                            w.rabi_hz,
                            w.phase
                        ));
                        if !w.detune_hz.is_zero() {
                            out.push_str(&format!(" detune={}Hz", w.detune_hz));
                        }
                        if !w.start.is_zero() {
                            out.push_str(&format!(" at={}s", w.start));
                        }
                        out.push('\n');
                    }
                    out.push_str("}\n");
                }
            }
            SegmentKind::Idle => {
                out.push_str(&format!("hold {}s mw=0Hz\n", seg.duration));
            }
            SegmentKind::Custom => return Err(SerializeError::Unrepresentable { index }),
        }
    }
    if schedule.measure_at_end && !schedule.segments.is_empty() {
        out.push_str("measure\n");
    }
    Ok(out)
}
