use thiserror::Error;

/// A scenario that cannot be run as written. `key` names the offending
/// entry of the scenario file.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("configuration error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Attach a key to a library error.
    pub fn at(key: impl Into<String>) -> impl FnOnce(fibconn::Error) -> ConfigError {
        let key = key.into();
        move |e| ConfigError::new(key, e.to_string())
    }
}
