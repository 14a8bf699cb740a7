use thiserror::Error;

use crate::protocol::{ErrorBody, TurnResult};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    /// The deadline passed before the action arrived. Carries the forced turn
    /// that was applied in its place.
    #[error("turn deadline passed; straight was applied")]
    Timeout(Box<TurnResult>),
    #[error("session is over")]
    Finished,
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Timeout(_) => "timeout",
            ServiceError::Finished => "finished",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn body(&self) -> ErrorBody {
        let forced_turn = match self {
            ServiceError::Timeout(t) => Some(t.clone()),
            _ => None,
        };
        ErrorBody { code: self.code().to_string(), message: self.to_string(), forced_turn }
    }
}
