use serde::{Deserialize, Serialize};

use super::reverse::make_reverse_question;
use crate::corpus::{tokenize_with_offsets, Passage};
use crate::error::Result;
use crate::index::fold;
use crate::readers::{reader_context, Reader};
use crate::supervision::fuzzy_f1;

/// Question words replaced by the object when a template is inverted.
pub const INTERROGATIVES: [&str; 7] = ["what", "who", "whom", "whose", "when", "where", "which"];

const SUBJECT_SLOT: &str = "<subject>";

/// A known (subject, object) pair of a relationship.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackwardTuple {
    pub question_template: String,
    pub subject: String,
    pub object: String,
}

/// One training example for a backward reader: the reverse question, the
/// passage, and where the subject sits in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackwardExample {
    pub reverse_question: String,
    pub passage_id: String,
    /// Inclusive token span of the subject in the passage.
    pub p_subject: [usize; 2],
}

/// Questions asking for the subject given the object: the first question word
/// of the template becomes the object and the subject slot becomes each
/// question word in turn.
pub fn invert_question(template: &str, object: &str) -> Vec<String> {
    if !template.contains(SUBJECT_SLOT) {
        return Vec::new();
    }
    let tokens = tokenize_with_offsets(template);
    let with_object = match tokens
        .iter()
        .find(|(t, _)| INTERROGATIVES.contains(&fold(t).as_str()))
    {
        Some((_, r)) => format!("{}{object}{}", &template[..r.start], &template[r.end..]),
        None => format!("{object} {template}"),
    };
    INTERROGATIVES
        .iter()
        .map(|w| with_object.replacen(SUBJECT_SLOT, w, 1))
        .collect()
}

/// Reads each passage with the inverted questions of its tuple and keeps the
/// first reading whose answer matches the subject with fuzzy F1 at least
/// `threshold`. Returns the examples and the number of tuples that produced
/// none.
pub fn build_backward_training_data<R: Reader + ?Sized>(
    reader: &R,
    tuples: &[(BackwardTuple, Vec<&Passage>)],
    threshold: f64,
) -> Result<(Vec<BackwardExample>, usize)> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for (tuple, passages) in tuples {
        let question = tuple.question_template.replacen(SUBJECT_SLOT, &tuple.subject, 1);
        let Ok(rq) = make_reverse_question(&question, &tuple.subject, &tuple.object) else {
            log::warn!("backward data: subject `{}` not in `{question}`", tuple.subject);
            skipped += 1;
            continue;
        };
        let inverted = invert_question(&tuple.question_template, &tuple.object);
        let before = out.len();
        for passage in passages {
            for q in &inverted {
                let answer = reader
                    .read(q, passage)
                    .map_err(reader_context(q, &passage.passage_id))?;
                if let Some(span) = answer.span {
                    if fuzzy_f1(&answer.text, &tuple.subject) >= threshold {
                        out.push(BackwardExample {
                            reverse_question: rq.surface.clone(),
                            passage_id: passage.passage_id.clone(),
                            p_subject: [span.start, span.end],
                        });
                        break;
                    }
                }
            }
        }
        if out.len() == before {
            skipped += 1;
        }
    }
    Ok((out, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readers::StubReader;

    #[test]
    fn inversion_replaces_question_word_and_slot() {
        let qs = invert_question("What organization did <subject> work for?", "IBM");
        assert_eq!(qs.len(), 7);
        assert_eq!(qs[1], "IBM organization did who work for?");
        assert!(qs.iter().all(|q| !q.contains(SUBJECT_SLOT)));
        assert!(invert_question("no slot here", "x").is_empty());
    }

    #[test]
    fn finds_subject_in_passage() {
        let reader = StubReader::new(0, 4).unwrap();
        let p = Passage::from_text("d#0", "d", "Alice Smith , of IBM .");
        let tuple = BackwardTuple {
            question_template: "What organization did <subject> work for?".into(),
            subject: "Alice Smith".into(),
            object: "IBM".into(),
        };
        let (examples, skipped) = build_backward_training_data(&reader, &[(tuple, vec![&p])], 0.7).unwrap();
        assert_eq!(skipped, 0);
        assert_eq!(examples.len(), 1);
        assert_eq!(examples[0].p_subject, [0, 1]);
        assert_eq!(
            examples[0].reverse_question,
            "object : IBM , question : What organization did <sub_mask> work for?"
        );
    }
}
