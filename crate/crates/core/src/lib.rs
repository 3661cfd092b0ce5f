pub mod compiler;
mod lexer;
pub mod fs;
pub mod grammar;
pub mod machine;
pub mod run;
pub mod signature;
pub mod term;
