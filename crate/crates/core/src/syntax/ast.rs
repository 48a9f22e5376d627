//! Abstract syntax for models: the functional level (datatypes, functions,
//! expressions, patterns) and the concurrent object level (interfaces,
//! classes, statements, guards, annotations).

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Source position (1-based line and column).
///
/// Positions are carried for diagnostics only: two positions always compare
/// equal, so structural equality of syntax trees ignores where they came from.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A statement list. Shared so that runtime continuations can point into it.
pub type Block = Arc<[Stmt]>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeRef {
    pub name: String,
    pub args: Vec<TypeRef>,
    pub pos: Pos,
}

impl TypeRef {
    pub fn simple(name: &str) -> Self {
        TypeRef {
            name: name.to_string(),
            args: Vec::new(),
            pos: Pos::default(),
        }
    }

    pub fn generic(name: &str, args: Vec<TypeRef>) -> Self {
        TypeRef {
            name: name.to_string(),
            args,
            pos: Pos::default(),
        }
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            f.write_str("<")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(">")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataDecl {
    pub name: String,
    pub type_params: Vec<String>,
    pub ctors: Vec<CtorDecl>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtorDecl {
    pub name: String,
    /// Argument types, each with an optional selector name (`Log(String job, ...)`).
    pub args: Vec<(TypeRef, Option<String>)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub ret: TypeRef,
    pub name: String,
    pub type_params: Vec<String>,
    pub params: Vec<Param>,
    pub body: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodSig {
    pub ret: TypeRef,
    pub name: String,
    pub params: Vec<Param>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceDecl {
    pub name: String,
    pub methods: Vec<MethodSig>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub ty: TypeRef,
    pub name: String,
    pub init: Option<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDecl {
    pub annotations: AnnotationSet,
    pub sig: MethodSig,
    pub body: Block,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub annotations: AnnotationSet,
    pub name: String,
    pub params: Vec<Param>,
    pub implements: Vec<String>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub pos: Pos,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.sig.name == name)
    }
}

/// A parsed program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelAst {
    pub datatypes: Vec<DataDecl>,
    pub functions: Vec<FunDecl>,
    pub interfaces: Vec<InterfaceDecl>,
    pub classes: Vec<ClassDecl>,
    pub main: Option<Block>,
}

impl ModelAst {
    /// Concatenate two models; declarations of `self` come first.
    pub fn merged_with(mut self, other: ModelAst) -> ModelAst {
        self.datatypes.extend(other.datatypes);
        self.functions.extend(other.functions);
        self.interfaces.extend(other.interfaces);
        self.classes.extend(other.classes);
        if other.main.is_some() {
            self.main = other.main;
        }
        self
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }
}

/// Annotations attached to classes, methods, call statements and object
/// creation. Which keys may appear where is enforced by the checker.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    pub deadline: Option<Expr>,
    pub critical: Option<Expr>,
    pub cost: Option<Expr>,
    pub scheduler: Option<Expr>,
}

impl AnnotationSet {
    pub fn is_empty(&self) -> bool {
        self.deadline.is_none()
            && self.critical.is_none()
            && self.cost.is_none()
            && self.scheduler.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// Expression without a meaningful source position (compiler-inserted).
    pub fn synth(kind: ExprKind) -> Self {
        Expr {
            kind,
            pos: Pos::default(),
        }
    }

    pub fn ctor(name: &str, args: Vec<Expr>) -> Self {
        Expr::synth(ExprKind::Ctor(name.to_string(), args))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Self {
        Expr::synth(ExprKind::Call(name.to_string(), args))
    }

    pub fn var(name: &str) -> Self {
        Expr::synth(ExprKind::Var(name.to_string()))
    }

    pub fn int(n: i64) -> Self {
        Expr::synth(ExprKind::Lit(Literal::Int(BigInt::from(n))))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Bool(bool),
    Int(BigInt),
    Rat(BigRational),
    Str(String),
    Null,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Lit(Literal),
    Var(String),
    This,
    Destiny,
    Deadline,
    Now,
    Ctor(String, Vec<Expr>),
    Call(String, Vec<Expr>),
    Case(Box<Expr>, Vec<Branch>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub pattern: Pattern,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Wildcard,
    Var(String),
    Lit(Literal),
    Ctor(String, Vec<Pattern>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guard {
    Expr(Expr),
    Future(String, Pos),
    Duration(Expr, Expr),
    And(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn has_duration(&self) -> bool {
        match self {
            Guard::Duration(..) => true,
            Guard::And(a, b) => a.has_duration() || b.has_duration(),
            _ => false,
        }
    }
}

/// Right-hand sides of assignments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rhs {
    Expr(Expr),
    New(String, Vec<Expr>),
    Get(Expr),
    AsyncCall(Expr, String, Vec<Expr>),
    /// `o.m(ē)`; removed by desugaring.
    SyncCall(Expr, String, Vec<Expr>),
}

impl Rhs {
    pub fn is_call(&self) -> bool {
        matches!(self, Rhs::AsyncCall(..) | Rhs::SyncCall(..))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

impl Stmt {
    pub fn new(kind: StmtKind, pos: Pos) -> Self {
        Stmt { kind, pos }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Skip,
    Suspend,
    Return(Expr),
    Await(Guard),
    Duration(Expr, Expr),
    If(Expr, Block, Option<Block>),
    While(Expr, Block),
    /// `[a] T x = rhs;` or `T x;`
    Decl {
        ty: TypeRef,
        name: String,
        init: Option<Rhs>,
        ann: AnnotationSet,
    },
    /// `[a] x = rhs;`
    Assign {
        target: String,
        rhs: Rhs,
        ann: AnnotationSet,
    },
    /// `[a] o!m(ē);`, `o.m(ē);` or `f.get;` with the result discarded.
    Discard { rhs: Rhs, ann: AnnotationSet },
    /// `[a] await x = o.m(ē);`; removed by desugaring.
    AwaitCall {
        target: Option<String>,
        callee: Expr,
        method: String,
        args: Vec<Expr>,
        ann: AnnotationSet,
    },
}

impl StmtKind {
    /// Right-hand side and annotations of assignment-like statements.
    pub fn rhs(&self) -> Option<(&Rhs, &AnnotationSet)> {
        match self {
            StmtKind::Decl {
                init: Some(rhs),
                ann,
                ..
            } => Some((rhs, ann)),
            StmtKind::Assign { rhs, ann, .. } | StmtKind::Discard { rhs, ann } => Some((rhs, ann)),
            _ => None,
        }
    }

    /// Assignment target, if the statement writes a variable.
    pub fn target(&self) -> Option<&str> {
        match self {
            StmtKind::Decl { name, .. } => Some(name),
            StmtKind::Assign { target, .. } => Some(target),
            StmtKind::AwaitCall { target, .. } => target.as_deref(),
            _ => None,
        }
    }
}

/// Names of the process-local variables every method activation carries.
pub const PROCESS_LOCALS: [&str; 9] = [
    "method", "arrival", "cost", "deadline", "start", "finish", "critical", "value", "destiny",
];

/// Names that models may not redeclare as locals or parameters.
pub const RESERVED_NAMES: [&str; 10] = [
    "method", "arrival", "cost", "deadline", "start", "finish", "critical", "value", "destiny",
    "queue",
];

/// Collect every local declared (at any nesting depth) in a statement list,
/// in order of appearance.
pub fn declared_locals(block: &[Stmt]) -> Vec<(String, TypeRef, Pos)> {
    fn walk(block: &[Stmt], out: &mut Vec<(String, TypeRef, Pos)>) {
        for s in block {
            match &s.kind {
                StmtKind::Decl { ty, name, .. } => out.push((name.clone(), ty.clone(), s.pos)),
                StmtKind::If(_, t, e) => {
                    walk(t, out);
                    if let Some(e) = e {
                        walk(e, out);
                    }
                }
                StmtKind::While(_, b) => walk(b, out),
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    walk(block, &mut out);
    out
}
