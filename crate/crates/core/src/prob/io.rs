use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Alphabet, Channel, Joint};

/// JSON form of a distribution: `{"variables":[{"name","size"}],"mass":[..]}`
/// with row-major mass.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DistributionDoc {
    pub variables: Vec<Alphabet>,
    pub mass: Vec<f64>,
}

impl DistributionDoc {
    pub fn to_joint<T: Scalar>(&self) -> Result<Joint<T>> {
        Joint::new(self.variables.clone(), self.mass.iter().map(|&p| T::lit(p)).collect())
    }

    pub fn from_joint<T: Scalar>(d: &Joint<T>) -> Self {
        Self { variables: d.vars().to_vec(), mass: d.mass().iter().map(|p| p.as_f64()).collect() }
    }
}

fn default_input_name() -> String {
    "X".into()
}

/// JSON form of a channel:
/// `{"input_size", "output_variables":[{"name","size"}], "rows":[[..], ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelDoc {
    #[serde(default = "default_input_name")]
    pub input_name: String,
    pub input_size: usize,
    pub output_variables: Vec<Alphabet>,
    pub rows: Vec<Vec<f64>>,
}

impl ChannelDoc {
    pub fn to_channel<T: Scalar>(&self) -> Result<Channel<T>> {
        Channel::new(
            Alphabet::new(self.input_name.clone(), self.input_size),
            self.output_variables.clone(),
            self.rows.iter().map(|r| r.iter().map(|&p| T::lit(p)).collect()).collect(),
        )
    }

    pub fn from_channel<T: Scalar>(ch: &Channel<T>) -> Self {
        Self {
            input_name: ch.input().name.clone(),
            input_size: ch.input().size,
            output_variables: ch.outputs().to_vec(),
            rows: ch.rows().into_iter().map(|r| r.into_iter().map(|p| p.as_f64()).collect()).collect(),
        }
    }
}

pub fn parse_distribution<T: Scalar>(text: &str) -> Result<Joint<T>> {
    let doc: DistributionDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("distribution: {e}")))?;
    doc.to_joint()
}

pub fn parse_channel<T: Scalar>(text: &str) -> Result<Channel<T>> {
    let doc: ChannelDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("channel: {e}")))?;
    doc.to_channel()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_round_trip() {
        let text = r#"{"input_size":2,"output_variables":[{"name":"Y","size":2}],
                       "rows":[[0.9,0.1],[0.2,0.8]]}"#;
        let ch: Channel<f64> = parse_channel(text).unwrap();
        let doc = ChannelDoc::from_channel(&ch);
        assert_eq!(doc.rows[1], vec![0.2, 0.8]);
        assert_eq!(doc.input_name, "X");
    }

    #[test]
    fn bad_row_reports_row_index() {
        let text = r#"{"input_size":2,"output_variables":[{"name":"Y","size":2}],
                       "rows":[[0.9,0.1],[0.5,0.4]]}"#;
        let err = parse_channel::<f64>(text).unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn distribution_parses() {
        let d: Joint<f64> =
            parse_distribution(r#"{"variables":[{"name":"A","size":2}],"mass":[0.25,0.75]}"#).unwrap();
        assert_eq!(d.mass(), &[0.25, 0.75]);
    }
}
