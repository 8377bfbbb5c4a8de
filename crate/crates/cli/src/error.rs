use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFICATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Maps an error chain to an exit code: explicit CLI errors first, then
/// library errors by kind; anything else is treated as numerical.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Config(_) => EXIT_CONFIG,
                CliError::Verification(_) => EXIT_VERIFICATION,
                CliError::Numerical(_) => EXIT_NUMERICAL,
            };
        }
        if let Some(e) = cause.downcast_ref::<poleshift::Error>() {
            use poleshift::Error as E;
            return match e {
                E::InvalidGeometry(_) | E::InvalidArgument(_) | E::UnknownParameter(_) | E::Material(_) => {
                    EXIT_CONFIG
                }
                _ => EXIT_NUMERICAL,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_CONFIG;
        }
    }
    EXIT_NUMERICAL
}
