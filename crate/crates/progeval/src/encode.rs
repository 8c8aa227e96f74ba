//! Character vocabulary, target rendering, input transformations, and
//! packing of samples into fixed-length unroll windows.
//!
//! A sample occupies `code + target` consecutive positions in a lane. The
//! prediction at the position feeding the input end marker is the first
//! target character; after that the true previous target character is fed
//! (teacher forcing). The loss mask is true exactly where the predicted
//! character is part of the target, including its end marker.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::progsynth::Sample;

pub const END_MARKER: char = '.';
/// Separator inserted between the two copies by input doubling.
pub const DOUBLING_SEPARATOR: char = ';';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("character {0:?} is not in the input alphabet")]
    UnknownInputChar(char),
    #[error("character {0:?} is not in the output alphabet")]
    UnknownOutputChar(char),
}

/// Bijection between characters and dense token ids, with separate input and
/// output alphabets. Output characters are a subset of input characters so
/// teacher forcing can feed targets back in. One extra input id is reserved
/// for padding at lane tails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    input_chars: Vec<char>,
    output_chars: Vec<char>,
}

const PROGRAM_INPUT: &str = "0123456789abcdefghijklmnopqrstuvwxyz+-*=()<>:, \n.;";
const PROGRAM_OUTPUT: &str = "0123456789-.";
const MEMORIZE_INPUT: &str = "0123456789;.";
const MEMORIZE_OUTPUT: &str = "0123456789.";

impl Vocabulary {
    /// Full program alphabet; 12 output symbols (digits, minus, end marker).
    pub fn program() -> Self {
        Vocabulary {
            input_chars: PROGRAM_INPUT.chars().collect(),
            output_chars: PROGRAM_OUTPUT.chars().collect(),
        }
    }

    /// Addition shares the program alphabets.
    pub fn addition() -> Self {
        Self::program()
    }

    /// Digits plus separator and end marker; 11 output symbols (no minus).
    pub fn memorize() -> Self {
        Vocabulary {
            input_chars: MEMORIZE_INPUT.chars().collect(),
            output_chars: MEMORIZE_OUTPUT.chars().collect(),
        }
    }

    pub fn input_chars(&self) -> &[char] {
        &self.input_chars
    }

    pub fn output_chars(&self) -> &[char] {
        &self.output_chars
    }

    /// Number of input token ids, including the padding id.
    pub fn input_size(&self) -> usize {
        self.input_chars.len() + 1
    }

    pub fn output_size(&self) -> usize {
        self.output_chars.len()
    }

    pub fn pad_id(&self) -> u32 {
        self.input_chars.len() as u32
    }

    pub fn encode_input(&self, c: char) -> Result<u32, EncodeError> {
        self.input_chars
            .iter()
            .position(|&x| x == c)
            .map(|i| i as u32)
            .ok_or(EncodeError::UnknownInputChar(c))
    }

    pub fn encode_output(&self, c: char) -> Result<u32, EncodeError> {
        self.output_chars
            .iter()
            .position(|&x| x == c)
            .map(|i| i as u32)
            .ok_or(EncodeError::UnknownOutputChar(c))
    }

    pub fn decode_input(&self, id: u32) -> Option<char> {
        self.input_chars.get(id as usize).copied()
    }

    pub fn decode_output(&self, id: u32) -> Option<char> {
        self.output_chars.get(id as usize).copied()
    }
}

/// Decimal rendering of a target value, terminated by the end marker.
pub fn render_target(value: &BigInt) -> String {
    if value.is_zero() {
        return format!("0{END_MARKER}");
    }
    format!("{value}{END_MARKER}")
}

fn split_payload(code: &str) -> (&str, bool) {
    match code.strip_suffix(END_MARKER) {
        Some(payload) => (payload, true),
        None => (code, false),
    }
}

/// Reverses the input payload, leaving any trailing end marker in place.
/// The target of the sample is untouched by construction.
pub fn reverse_input(code: &str) -> String {
    let (payload, marked) = split_payload(code);
    let mut out: String = payload.chars().rev().collect();
    if marked {
        out.push(END_MARKER);
    }
    out
}

/// Presents the input payload twice, separated by ';'.
pub fn double_input(code: &str) -> String {
    let (payload, marked) = split_payload(code);
    let mut out = String::with_capacity(payload.len() * 2 + 2);
    out.push_str(payload);
    out.push(DOUBLING_SEPARATOR);
    out.push_str(payload);
    if marked {
        out.push(END_MARKER);
    }
    out
}

/// Input transformation flags. Doubling is applied before reversal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transforms {
    pub reverse: bool,
    pub double: bool,
}

impl Transforms {
    pub fn apply(&self, code: &str) -> String {
        let mut out = if self.double {
            double_input(code)
        } else {
            code.to_owned()
        };
        if self.reverse {
            out = reverse_input(&out);
        }
        out
    }
}

/// Token stream of one sample: input ids to feed, plus the output id to
/// predict at each position (None where the prediction is not scored).
pub fn encode_sample(
    sample: &Sample,
    transforms: Transforms,
    vocab: &Vocabulary,
) -> Result<(Vec<u32>, Vec<Option<u32>>), EncodeError> {
    let code = transforms.apply(&sample.code);
    let code_chars: Vec<char> = code.chars().collect();
    let target_chars: Vec<char> = sample.target.chars().collect();
    let mut tokens = Vec::with_capacity(code_chars.len() + target_chars.len());
    let mut labels = Vec::with_capacity(tokens.capacity());
    for &c in &code_chars {
        tokens.push(vocab.encode_input(c)?);
        labels.push(None);
    }
    // The token feeding the input end marker predicts the first target char;
    // each fed target char predicts the next one.
    for &t in &target_chars {
        *labels.last_mut().expect("code is never empty") = Some(vocab.encode_output(t)?);
        tokens.push(vocab.encode_input(t)?);
        labels.push(None);
    }
    Ok((tokens, labels))
}

/// One unroll window across all lanes.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedStream {
    /// `[lane][position]` input token ids.
    pub tokens: Vec<Vec<u32>>,
    /// `[lane][position]` output ids to predict, aligned with `loss_mask`.
    pub labels: Vec<Vec<u32>>,
    /// `[lane][position]` true only where the prediction is a target character.
    pub loss_mask: Vec<Vec<bool>>,
    pub lane_count: usize,
    pub window: usize,
}

impl PackedStream {
    pub fn masked_positions(&self) -> usize {
        self.loss_mask
            .iter()
            .map(|lane| lane.iter().filter(|&&m| m).count())
            .sum()
    }
}

/// Incremental per-lane packer used by the training driver: lanes are
/// independent contiguous streams and samples may straddle window boundaries.
#[derive(Debug)]
pub struct LanePacker {
    lanes: Vec<std::collections::VecDeque<(u32, Option<u32>)>>,
    window: usize,
}

impl LanePacker {
    pub fn new(lane_count: usize, window: usize) -> Self {
        assert!(lane_count >= 1 && window >= 1);
        LanePacker {
            lanes: (0..lane_count)
                .map(|_| std::collections::VecDeque::new())
                .collect(),
            window,
        }
    }

    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }

    /// Lane that currently has the fewest buffered tokens.
    pub fn shortest_lane(&self) -> usize {
        (0..self.lanes.len())
            .min_by_key(|&i| self.lanes[i].len())
            .unwrap()
    }

    pub fn lane_len(&self, lane: usize) -> usize {
        self.lanes[lane].len()
    }

    pub fn push_sample(
        &mut self,
        lane: usize,
        sample: &Sample,
        transforms: Transforms,
        vocab: &Vocabulary,
    ) -> Result<(), EncodeError> {
        let (tokens, labels) = encode_sample(sample, transforms, vocab)?;
        self.lanes[lane].extend(tokens.into_iter().zip(labels));
        Ok(())
    }

    /// True when every lane can fill a whole window.
    pub fn ready(&self) -> bool {
        self.lanes.iter().all(|l| l.len() >= self.window)
    }

    /// Pops one window from every lane; lanes shorter than the window are
    /// padded at the tail with the pad id, mask false.
    pub fn next_window(&mut self, vocab: &Vocabulary) -> PackedStream {
        let lane_count = self.lanes.len();
        let mut tokens = vec![Vec::with_capacity(self.window); lane_count];
        let mut labels = vec![Vec::with_capacity(self.window); lane_count];
        let mut mask = vec![Vec::with_capacity(self.window); lane_count];
        for (i, lane) in self.lanes.iter_mut().enumerate() {
            for _ in 0..self.window {
                match lane.pop_front() {
                    Some((tok, lab)) => {
                        tokens[i].push(tok);
                        labels[i].push(lab.unwrap_or(0));
                        mask[i].push(lab.is_some());
                    }
                    None => {
                        tokens[i].push(vocab.pad_id());
                        labels[i].push(0);
                        mask[i].push(false);
                    }
                }
            }
        }
        PackedStream {
            tokens,
            labels,
            loss_mask: mask,
            lane_count,
            window: self.window,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.iter().all(|l| l.is_empty())
    }
}

/// Packs a fixed batch of samples: round-robin lane assignment, then windows
/// covering every lane without gaps, padded at the tail.
pub fn pack(
    samples: &[Sample],
    vocab: &Vocabulary,
    lanes: usize,
    window: usize,
    transforms: Transforms,
) -> Result<Vec<PackedStream>, EncodeError> {
    let mut packer = LanePacker::new(lanes, window);
    for (i, s) in samples.iter().enumerate() {
        packer.push_sample(i % lanes, s, transforms, vocab)?;
    }
    let mut windows = Vec::new();
    while !packer.is_empty() {
        windows.push(packer.next_window(vocab));
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::progsynth::Split;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn sample(code: &str, target: &str) -> Sample {
        Sample {
            code: code.into(),
            target: target.into(),
            length: 1,
            nesting: 1,
            split: Split::Train,
        }
    }

    #[test]
    fn render_examples() {
        assert_eq!(render_target(&BigInt::from(25011)), "25011.");
        assert_eq!(render_target(&BigInt::from(-2327)), "-2327.");
        assert_eq!(render_target(&BigInt::from(0)), "0.");
    }

    #[test]
    fn output_alphabet_sizes() {
        assert_eq!(Vocabulary::program().output_size(), 12);
        assert_eq!(Vocabulary::addition().output_size(), 12);
        assert_eq!(Vocabulary::memorize().output_size(), 11);
    }

    #[test]
    fn vocabulary_round_trip() {
        let v = Vocabulary::program();
        for &c in v.input_chars() {
            assert_eq!(v.decode_input(v.encode_input(c).unwrap()), Some(c));
        }
        for &c in v.output_chars() {
            assert_eq!(v.decode_output(v.encode_output(c).unwrap()), Some(c));
        }
        assert_eq!(v.encode_input('Q'), Err(EncodeError::UnknownInputChar('Q')));
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(reverse_input("123456789"), "987654321");
        assert_eq!(reverse_input("121"), "121");
        assert_eq!(reverse_input("123456789."), "987654321.");
    }

    #[test]
    fn double_examples() {
        assert_eq!(double_input("123456789"), "123456789;123456789");
        assert_eq!(double_input(""), ";");
        assert_eq!(double_input("12."), "12;12.");
    }

    #[test]
    fn double_then_reverse_composition() {
        let t = Transforms {
            reverse: true,
            double: true,
        };
        assert_eq!(t.apply("123"), "321;321");
        assert_eq!(t.apply("123456789."), "987654321;987654321.");
    }

    proptest! {
        #[test]
        fn reverse_is_an_involution(payload in "[0-9]{0,40}") {
            let code = format!("{payload}.");
            prop_assert_eq!(reverse_input(&reverse_input(&code)), code);
        }

        #[test]
        fn doubled_then_reversed_has_length_2n_plus_1(payload in "[0-9]{0,40}") {
            let t = Transforms { reverse: true, double: true };
            prop_assert_eq!(t.apply(&payload).chars().count(), payload.chars().count() * 2 + 1);
        }
    }

    #[test]
    fn single_short_sample_pads_tail_mask_false() {
        let v = Vocabulary::memorize();
        let s = sample("123.", "123.");
        let windows = pack(&[s], &v, 1, 50, Transforms::default()).unwrap();
        assert_eq!(windows.len(), 1);
        let w = &windows[0];
        assert_eq!(w.tokens[0].len(), 50);
        // code 4 + target 4 = 8 positions, 4 masked, tail padded and unmasked
        assert_eq!(w.masked_positions(), 4);
        assert!(w.tokens[0][8..].iter().all(|&t| t == v.pad_id()));
        assert!(w.loss_mask[0][8..].iter().all(|&m| !m));
    }

    #[test]
    fn straddling_sample_reconstructs_across_windows() {
        let v = Vocabulary::memorize();
        let payload: String = "0123456789".chars().cycle().take(34).collect();
        let code = format!("{payload}.");
        let target = format!("{payload}.");
        let s = sample(&code, &target);
        // total footprint 35 + 35 = 70 > 50: straddles two windows
        let windows = pack(&[s.clone()], &v, 1, 50, Transforms::default()).unwrap();
        assert_eq!(windows.len(), 2);
        let mut recovered = String::new();
        for w in &windows {
            for (pos, &m) in w.loss_mask[0].iter().enumerate() {
                if m {
                    recovered.push(v.decode_output(w.labels[0][pos]).unwrap());
                }
            }
        }
        assert_eq!(recovered, target);
    }

    #[test]
    fn masked_positions_equal_total_target_length() {
        let v = Vocabulary::program();
        let cfg = crate::progsynth::GenConfig::new(3, 2, 0).unwrap();
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let samples: Vec<Sample> = (0..100)
            .map(|_| crate::progsynth::generate(&cfg, &mut rng))
            .collect();
        let total_target: usize = samples.iter().map(|s| s.target.chars().count()).sum();
        let windows = pack(&samples, &v, 4, 32, Transforms::default()).unwrap();
        let masked: usize = windows.iter().map(|w| w.masked_positions()).sum();
        assert_eq!(masked, total_target);
    }

    #[test]
    fn unpack_recovers_every_sample_stream() {
        let v = Vocabulary::memorize();
        let samples: Vec<Sample> = (0..7)
            .map(|i| {
                let p: String = std::iter::repeat('1').take(i + 1).collect();
                sample(&format!("{p}."), &format!("{p}."))
            })
            .collect();
        let lanes = 3;
        let windows = pack(&samples, &v, lanes, 5, Transforms::default()).unwrap();
        // Re-concatenate each lane and compare against direct encoding.
        for lane in 0..lanes {
            let mut got: Vec<(u32, bool)> = Vec::new();
            for w in &windows {
                for p in 0..w.window {
                    got.push((w.tokens[lane][p], w.loss_mask[lane][p]));
                }
            }
            let mut want: Vec<(u32, bool)> = Vec::new();
            for (i, s) in samples.iter().enumerate() {
                if i % lanes == lane {
                    let (toks, labs) = encode_sample(s, Transforms::default(), &v).unwrap();
                    want.extend(toks.into_iter().zip(labs.into_iter().map(|l| l.is_some())));
                }
            }
            while want.len() < got.len() {
                want.push((v.pad_id(), false));
            }
            assert_eq!(got, want, "lane {lane}");
        }
    }

    #[test]
    fn encoding_error_names_the_character() {
        let v = Vocabulary::memorize();
        let s = sample("12a.", "12.");
        let err = encode_sample(&s, Transforms::default(), &v).unwrap_err();
        assert_eq!(err, EncodeError::UnknownInputChar('a'));
    }
}
