//! Loading a model: prelude + user source, checked and desugared.

use crate::func::Functions;
use crate::sched::prelude_ast;
use crate::syntax::{check_model, desugar, parse_model, Diagnostic, ModelAst};

/// A checked, desugared model ready for simulation.
#[derive(Clone, Debug)]
pub struct Program {
    pub ast: ModelAst,
    pub funcs: Functions,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&crate::syntax::ast::ClassDecl> {
        self.ast.class(name)
    }
}

/// Diagnostics for a model source; empty iff it loads.
pub fn check_source(src: &str) -> Vec<Diagnostic> {
    match parse_model(src) {
        Err(d) => vec![d],
        Ok(user) => check_model(&prelude_ast().clone().merged_with(user)),
    }
}

pub fn load_program(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let user = parse_model(src).map_err(|d| vec![d])?;
    let merged = prelude_ast().clone().merged_with(user);
    let diags = check_model(&merged);
    if !diags.is_empty() {
        return Err(diags);
    }
    let ast = desugar(merged);
    let funcs = Functions::new(&ast);
    Ok(Program { ast, funcs })
}
