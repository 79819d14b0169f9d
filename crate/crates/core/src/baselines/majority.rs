use crate::corpus::Label;

use super::TrainError;

/// Most frequent label; ties go to metaphoric.
pub fn train_majority(labels: impl IntoIterator<Item = Label>) -> Result<Label, TrainError> {
    let (mut met, mut lit) = (0u64, 0u64);
    for l in labels {
        match l {
            Label::Metaphoric => met += 1,
            Label::Literal => lit += 1,
        }
    }
    if met + lit == 0 {
        return Err(TrainError::Empty);
    }
    Ok(if met >= lit {
        Label::Metaphoric
    } else {
        Label::Literal
    })
}
