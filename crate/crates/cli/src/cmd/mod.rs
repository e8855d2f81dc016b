pub mod bisect;
pub mod check;
pub mod inject;
pub mod oracle;
pub mod report;
pub mod sweep;
