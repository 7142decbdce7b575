use crate::corpus::{tokenize, tokenize_with_offsets, SUB_MASK};
use crate::error::{Error, Result};
use crate::index::fold;

const OBJECT_TAG: &str = "object : ";
const QUESTION_TAG: &str = " , question : ";

/// A question asked from the answer's side: the object is given and the
/// subject of the original question is replaced by [`SUB_MASK`].
///
/// Surface form: `object : <object> , question : <masked question>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReverseQuestion {
    pub surface: String,
    pub object_text: String,
    pub masked_question: String,
    /// Position of the mask in `tokenize(surface)`.
    pub sub_mask_pos: usize,
}

impl ReverseQuestion {
    fn from_parts(object_text: &str, masked_question: &str) -> Option<Self> {
        let surface = format!("{OBJECT_TAG}{object_text}{QUESTION_TAG}{masked_question}");
        let tokens = tokenize(&surface);
        let mut masks = tokens.iter().enumerate().filter(|(_, t)| *t == SUB_MASK);
        let (sub_mask_pos, _) = masks.next()?;
        if masks.next().is_some() {
            return None;
        }
        Some(ReverseQuestion {
            surface,
            object_text: object_text.to_string(),
            masked_question: masked_question.to_string(),
            sub_mask_pos,
        })
    }

    /// Recovers the parts of a surface form; `None` if it is not one.
    pub fn parse(surface: &str) -> Option<Self> {
        let rest = surface.strip_prefix(OBJECT_TAG)?;
        let at = rest.find(QUESTION_TAG)?;
        Self::from_parts(&rest[..at], &rest[at + QUESTION_TAG.len()..])
    }
}

/// Masks the first case-insensitive token-level occurrence of `subject` in
/// `question` and prefixes the object.
pub fn make_reverse_question(question: &str, subject: &str, object: &str) -> Result<ReverseQuestion> {
    let not_found = || Error::SubjectNotFound {
        question: question.to_string(),
        subject: subject.to_string(),
    };
    let q = tokenize_with_offsets(question);
    let s: Vec<String> = tokenize(subject).iter().map(|t| fold(t)).collect();
    if s.is_empty() || s.len() > q.len() {
        return Err(not_found());
    }
    let i = (0..=q.len() - s.len())
        .find(|&i| q[i..i + s.len()].iter().zip(&s).all(|((t, _), w)| fold(t) == *w))
        .ok_or_else(not_found)?;
    let start = q[i].1.start;
    let end = q[i + s.len() - 1].1.end;
    let masked = format!("{}{SUB_MASK}{}", &question[..start], &question[end..]);
    ReverseQuestion::from_parts(object, &masked).ok_or_else(|| {
        Error::Invalid(format!(
            "reverse question for `{question}` must contain exactly one {SUB_MASK}"
        ))
    })
}
