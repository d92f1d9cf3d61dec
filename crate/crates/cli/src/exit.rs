use bodyaudit_core::Error;

pub const OK: i32 = 0;
pub const CONFIG: i32 = 2;
pub const BACKEND: i32 = 3;
pub const DATA: i32 = 4;

/// Exit code for an error: 2 for configuration, 3 for backend, 4 for
/// anything wrong with the data or the file system.
pub fn code(err: &anyhow::Error) -> i32 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config(_)) => CONFIG,
        Some(Error::Backend { .. }) => BACKEND,
        _ => DATA,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn classification_sees_through_context() {
        let e = Err::<(), _>(Error::Config("bad".into()))
            .context("loading")
            .unwrap_err();
        assert_eq!(code(&e), CONFIG);
        let e = anyhow::Error::from(Error::Data("x".into()));
        assert_eq!(code(&e), DATA);
        assert_eq!(code(&anyhow::anyhow!("plain")), DATA);
    }
}
