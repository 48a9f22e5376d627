//! Recursive-descent parser for model source text.

use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::Diagnostic;

type PResult<T> = Result<T, Diagnostic>;

/// Parse a whole model. Syntax errors carry the position of the offending
/// token and the set of tokens that would have been accepted there.
pub fn parse_model(src: &str) -> PResult<ModelAst> {
    let mut p = Parser::new(src)?;
    p.model()
}

/// Parse a single expression (used for policy expressions supplied outside a
/// model and in tests).
pub fn parse_expr(src: &str) -> PResult<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn is_upper(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

const KEYWORDS: &[&str] = &[
    "data", "def", "interface", "class", "implements", "if", "then", "else", "case", "while",
    "return", "skip", "suspend", "await", "new", "duration", "this", "null", "True", "False",
];

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> Pos {
        self.toks[self.pos].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> Diagnostic {
        let found = self.peek().to_string();
        let msg = match expected {
            [one] => format!("expected {one}, found {found}"),
            many => format!("expected one of {}, found {found}", many.join(", ")),
        };
        Diagnostic::error(self.here(), msg)
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&[&t.to_string()]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    // ---- declarations ----

    fn model(&mut self) -> PResult<ModelAst> {
        let mut m = ModelAst::default();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::LBrace => {
                    m.main = Some(self.block()?);
                    if !self.at(&Tok::Eof) {
                        return Err(self.unexpected(&["end of input after main block"]));
                    }
                    break;
                }
                Tok::LBracket => {
                    let ann = self.annotations()?;
                    if !self.at_kw("class") {
                        return Err(self.unexpected(&["`class`"]));
                    }
                    m.classes.push(self.class(ann)?);
                }
                Tok::Ident(s) => match s.as_str() {
                    "data" => m.datatypes.push(self.data()?),
                    "def" => m.functions.push(self.function()?),
                    "interface" => m.interfaces.push(self.interface()?),
                    "class" => m.classes.push(self.class(AnnotationSet::default())?),
                    _ => {
                        return Err(self.unexpected(&[
                            "`data`", "`def`", "`interface`", "`class`", "`[`", "`{`",
                        ]))
                    }
                },
                _ => {
                    return Err(self.unexpected(&[
                        "`data`", "`def`", "`interface`", "`class`", "`[`", "`{`",
                    ]))
                }
            }
        }
        Ok(m)
    }

    fn type_params(&mut self) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if self.eat(&Tok::Lt) {
            loop {
                out.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Gt)?;
        }
        Ok(out)
    }

    fn ty(&mut self) -> PResult<TypeRef> {
        let pos = self.here();
        let name = self.ident()?;
        let mut args = Vec::new();
        if self.eat(&Tok::Lt) {
            loop {
                args.push(self.ty()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Gt)?;
        }
        Ok(TypeRef { name, args, pos })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                let pos = self.here();
                let ty = self.ty()?;
                let name = self.ident()?;
                out.push(Param { ty, name, pos });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn data(&mut self) -> PResult<DataDecl> {
        let pos = self.here();
        self.expect_kw("data")?;
        let name = self.ident()?;
        let type_params = self.type_params()?;
        let mut ctors = Vec::new();
        if self.eat(&Tok::Assign) {
            loop {
                let cpos = self.here();
                let cname = self.ident()?;
                let mut args = Vec::new();
                if self.eat(&Tok::LParen) {
                    if !self.at(&Tok::RParen) {
                        loop {
                            let ty = self.ty()?;
                            let sel = if let Tok::Ident(_) = self.peek() {
                                Some(self.ident()?)
                            } else {
                                None
                            };
                            args.push((ty, sel));
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                }
                ctors.push(CtorDecl {
                    name: cname,
                    args,
                    pos: cpos,
                });
                if !self.eat(&Tok::Bar) {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        Ok(DataDecl {
            name,
            type_params,
            ctors,
            pos,
        })
    }

    fn function(&mut self) -> PResult<FunDecl> {
        let pos = self.here();
        self.expect_kw("def")?;
        let ret = self.ty()?;
        let name = self.ident()?;
        let type_params = self.type_params()?;
        let params = self.params()?;
        self.expect(Tok::Assign)?;
        let body = self.expr()?;
        self.expect(Tok::Semi)?;
        Ok(FunDecl {
            ret,
            name,
            type_params,
            params,
            body,
            pos,
        })
    }

    fn sig(&mut self) -> PResult<MethodSig> {
        let pos = self.here();
        let ret = self.ty()?;
        let name = self.ident()?;
        let params = self.params()?;
        Ok(MethodSig {
            ret,
            name,
            params,
            pos,
        })
    }

    fn interface(&mut self) -> PResult<InterfaceDecl> {
        let pos = self.here();
        self.expect_kw("interface")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut methods = Vec::new();
        while !self.eat(&Tok::RBrace) {
            methods.push(self.sig()?);
            self.expect(Tok::Semi)?;
        }
        Ok(InterfaceDecl { name, methods, pos })
    }

    fn class(&mut self, annotations: AnnotationSet) -> PResult<ClassDecl> {
        let pos = self.here();
        self.expect_kw("class")?;
        let name = self.ident()?;
        let params = if self.at(&Tok::LParen) {
            self.params()?
        } else {
            Vec::new()
        };
        let mut implements = Vec::new();
        if self.eat_kw("implements") {
            loop {
                implements.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::LBrace)?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let ann_pos = self.here();
            let ann = if self.at(&Tok::LBracket) {
                self.annotations()?
            } else {
                AnnotationSet::default()
            };
            let mpos = self.here();
            let ty = self.ty()?;
            let mname = self.ident()?;
            if self.at(&Tok::LParen) {
                let params = self.params()?;
                let body = self.block()?;
                methods.push(MethodDecl {
                    annotations: ann,
                    sig: MethodSig {
                        ret: ty,
                        name: mname,
                        params,
                        pos: mpos,
                    },
                    body,
                });
            } else {
                if !ann.is_empty() {
                    return Err(Diagnostic::error(ann_pos, "annotations are not allowed on fields"));
                }
                let init = if self.eat(&Tok::Assign) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::Semi)?;
                fields.push(FieldDecl {
                    ty,
                    name: mname,
                    init,
                    pos: mpos,
                });
            }
        }
        Ok(ClassDecl {
            annotations,
            name,
            params,
            implements,
            fields,
            methods,
            pos,
        })
    }

    fn annotations(&mut self) -> PResult<AnnotationSet> {
        let mut set = AnnotationSet::default();
        while self.eat(&Tok::LBracket) {
            loop {
                let pos = self.here();
                let key = self.ident()?;
                self.expect(Tok::Colon)?;
                let e = self.expr()?;
                let slot = match key.as_str() {
                    "Deadline" => &mut set.deadline,
                    "Critical" => &mut set.critical,
                    "Cost" => &mut set.cost,
                    "Scheduler" => &mut set.scheduler,
                    other => {
                        return Err(Diagnostic::error(
                            pos,
                            format!("unknown annotation `{other}` (expected Deadline, Critical, Cost or Scheduler)"),
                        ))
                    }
                };
                if slot.is_some() {
                    return Err(Diagnostic::error(pos, format!("duplicate `{key}` annotation")));
                }
                *slot = Some(e);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
        }
        Ok(set)
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(self.unexpected(&["`}`"]));
            }
            stmts.push(self.stmt()?);
        }
        Ok(Arc::from(stmts))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.here();
        let ann = if self.at(&Tok::LBracket) {
            Some(self.annotations()?)
        } else {
            None
        };
        let kind = if let Some(ann) = ann {
            match self.assign_like(ann.clone())? {
                Some(k) => k,
                None => {
                    if self.at_kw("await") {
                        self.bump();
                        self.await_call(ann)?
                    } else {
                        return Err(Diagnostic::error(
                            pos,
                            "annotations may only precede assignments, calls and object creation",
                        ));
                    }
                }
            }
        } else if self.eat_kw("skip") {
            self.expect(Tok::Semi)?;
            StmtKind::Skip
        } else if self.eat_kw("suspend") {
            self.expect(Tok::Semi)?;
            StmtKind::Suspend
        } else if self.eat_kw("return") {
            let e = self.expr()?;
            self.expect(Tok::Semi)?;
            StmtKind::Return(e)
        } else if self.eat_kw("await") {
            self.await_stmt()?
        } else if self.at_kw("duration") {
            self.bump();
            self.expect(Tok::LParen)?;
            let b = self.expr()?;
            self.expect(Tok::Comma)?;
            let w = self.expr()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Semi)?;
            StmtKind::Duration(b, w)
        } else if self.eat_kw("if") {
            self.if_rest()?
        } else if self.eat_kw("while") {
            let c = self.expr()?;
            let body = self.block()?;
            StmtKind::While(c, body)
        } else {
            match self.assign_like(AnnotationSet::default())? {
                Some(k) => k,
                None => return Err(self.unexpected(&["statement"])),
            }
        };
        Ok(Stmt::new(kind, pos))
    }

    fn if_rest(&mut self) -> PResult<StmtKind> {
        let c = self.expr()?;
        let then = self.block()?;
        let els = if self.eat_kw("else") {
            if self.at_kw("if") {
                let pos = self.here();
                self.bump();
                let inner = self.if_rest()?;
                Some(Arc::from(vec![Stmt::new(inner, pos)]))
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(StmtKind::If(c, then, els))
    }

    fn await_stmt(&mut self) -> PResult<StmtKind> {
        // `await x = o.m(ē);`
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Assign {
            return self.await_call(AnnotationSet::default());
        }
        let save = self.pos;
        let g = self.guard()?;
        if self.eat(&Tok::Semi) {
            return Ok(StmtKind::Await(g));
        }
        // `await o.m(ē);`
        self.pos = save;
        self.await_call(AnnotationSet::default())
    }

    fn await_call(&mut self, ann: AnnotationSet) -> PResult<StmtKind> {
        let target = if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Assign {
            let t = self.ident()?;
            self.bump();
            Some(t)
        } else {
            None
        };
        let callee = self.expr()?;
        self.expect(Tok::Dot)?;
        let method = self.ident()?;
        let args = self.args()?;
        self.expect(Tok::Semi)?;
        Ok(StmtKind::AwaitCall {
            target,
            callee,
            method,
            args,
            ann,
        })
    }

    /// Declarations, assignments and discarded calls. Returns `None` when the
    /// upcoming tokens cannot start such a statement.
    fn assign_like(&mut self, ann: AnnotationSet) -> PResult<Option<StmtKind>> {
        // declaration: Type ident ...
        if let Tok::Ident(first) = self.peek() {
            if !KEYWORDS.contains(&first.as_str()) || first == "this" {
                let save = self.pos;
                if let Ok(ty) = self.ty() {
                    if let Tok::Ident(n) = self.peek() {
                        if !KEYWORDS.contains(&n.as_str())
                            && matches!(self.peek_at(1), Tok::Assign | Tok::Semi)
                        {
                            let name = self.ident()?;
                            let init = if self.eat(&Tok::Assign) {
                                Some(self.rhs()?)
                            } else {
                                None
                            };
                            self.expect(Tok::Semi)?;
                            return Ok(Some(StmtKind::Decl { ty, name, init, ann }));
                        }
                    }
                }
                self.pos = save;
            }
        }
        if !self.starts_expr() {
            return Ok(None);
        }
        if let (Tok::Ident(name), Tok::Assign) = (self.peek().clone(), self.peek_at(1).clone()) {
            self.bump();
            self.bump();
            let rhs = self.rhs()?;
            self.expect(Tok::Semi)?;
            return Ok(Some(StmtKind::Assign {
                target: name,
                rhs,
                ann,
            }));
        }
        let e = self.expr()?;
        let rhs = match self.peek() {
            Tok::Bang | Tok::Dot => self.rhs_suffix(e)?,
            _ => return Err(self.unexpected(&["`=`", "`!`", "`.`"])),
        };
        self.expect(Tok::Semi)?;
        Ok(Some(StmtKind::Discard { rhs, ann }))
    }

    fn starts_expr(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str())
                || matches!(s.as_str(), "this" | "null" | "True" | "False" | "case" | "if"),
            Tok::Int(_) | Tok::Rat(_) | Tok::Str(_) | Tok::LParen | Tok::Bang | Tok::Minus => true,
            _ => false,
        }
    }

    fn rhs(&mut self) -> PResult<Rhs> {
        if self.eat_kw("new") {
            let class = self.ident()?;
            let args = if self.at(&Tok::LParen) {
                self.args()?
            } else {
                Vec::new()
            };
            return Ok(Rhs::New(class, args));
        }
        let e = self.expr()?;
        if matches!(self.peek(), Tok::Bang | Tok::Dot) {
            self.rhs_suffix(e)
        } else {
            Ok(Rhs::Expr(e))
        }
    }

    fn rhs_suffix(&mut self, e: Expr) -> PResult<Rhs> {
        if self.eat(&Tok::Bang) {
            let m = self.ident()?;
            let args = self.args()?;
            return Ok(Rhs::AsyncCall(e, m, args));
        }
        self.expect(Tok::Dot)?;
        if self.eat_kw("get") {
            return Ok(Rhs::Get(e));
        }
        let m = self.ident()?;
        let args = self.args()?;
        Ok(Rhs::SyncCall(e, m, args))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                out.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    // ---- guards ----

    fn guard(&mut self) -> PResult<Guard> {
        let mut g = self.guard_atom()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.guard_atom()?;
            g = Guard::And(Box::new(g), Box::new(rhs));
        }
        Ok(g)
    }

    fn guard_atom(&mut self) -> PResult<Guard> {
        if self.at_kw("duration") {
            self.bump();
            self.expect(Tok::LParen)?;
            let b = self.expr()?;
            self.expect(Tok::Comma)?;
            let w = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(Guard::Duration(b, w));
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if self.peek_at(1) == &Tok::Question {
                let pos = self.here();
                self.bump();
                self.bump();
                return Ok(Guard::Future(name, pos));
            }
        }
        Ok(Guard::Expr(self.cmp()?))
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> PResult<Expr> {
        self.or()
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut lhs = self.and()?;
        while self.at(&Tok::OrOr) {
            let pos = self.here();
            self.bump();
            let rhs = self.and()?;
            lhs = Expr::new(ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut lhs = self.cmp()?;
        while self.at(&Tok::AndAnd) {
            let pos = self.here();
            self.bump();
            let rhs = self.cmp()?;
            lhs = Expr::new(ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        let pos = self.here();
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.here();
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            let pos = self.here();
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.here();
        let op = match self.peek() {
            Tok::Bang => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.primary(),
        };
        self.bump();
        let e = self.unary()?;
        Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), pos))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.here();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                ExprKind::Lit(Literal::Int(n))
            }
            Tok::Rat(r) => {
                self.bump();
                ExprKind::Lit(Literal::Rat(r))
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Lit(Literal::Str(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(e);
            }
            Tok::Ident(name) => match name.as_str() {
                "True" | "False" => {
                    self.bump();
                    ExprKind::Lit(Literal::Bool(name == "True"))
                }
                "null" => {
                    self.bump();
                    ExprKind::Lit(Literal::Null)
                }
                "this" => {
                    self.bump();
                    ExprKind::This
                }
                "case" => {
                    self.bump();
                    let scrutinee = self.expr()?;
                    self.expect(Tok::LBrace)?;
                    let mut branches = Vec::new();
                    while !self.eat(&Tok::RBrace) {
                        let pattern = self.pattern()?;
                        self.expect(Tok::Arrow)?;
                        let body = self.expr()?;
                        if !self.eat(&Tok::Semi) && !self.at(&Tok::RBrace) {
                            return Err(self.unexpected(&["`;`", "`}`"]));
                        }
                        branches.push(Branch { pattern, body });
                    }
                    if branches.is_empty() {
                        return Err(Diagnostic::error(pos, "case expression needs at least one branch"));
                    }
                    ExprKind::Case(Box::new(scrutinee), branches)
                }
                "if" => {
                    self.bump();
                    let c = self.expr()?;
                    self.expect_kw("then")?;
                    let t = self.expr()?;
                    self.expect_kw("else")?;
                    let e = self.expr()?;
                    ExprKind::If(Box::new(c), Box::new(t), Box::new(e))
                }
                _ if KEYWORDS.contains(&name.as_str()) => {
                    return Err(self.unexpected(&["expression"]));
                }
                _ => {
                    self.bump();
                    let has_args = self.at(&Tok::LParen);
                    if is_upper(&name) {
                        let args = if has_args { self.args()? } else { Vec::new() };
                        ExprKind::Ctor(name, args)
                    } else if has_args {
                        let args = self.args()?;
                        if name == "now" && args.is_empty() {
                            ExprKind::Now
                        } else {
                            ExprKind::Call(name, args)
                        }
                    } else {
                        match name.as_str() {
                            "deadline" => ExprKind::Deadline,
                            "destiny" => ExprKind::Destiny,
                            "now" => ExprKind::Now,
                            _ => ExprKind::Var(name),
                        }
                    }
                }
            },
            _ => return Err(self.unexpected(&["expression"])),
        };
        Ok(Expr::new(kind, pos))
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Pattern::Lit(Literal::Int(n)))
            }
            Tok::Rat(r) => {
                self.bump();
                Ok(Pattern::Lit(Literal::Rat(r)))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => Ok(Pattern::Lit(Literal::Int(-n))),
                    Tok::Rat(r) => Ok(Pattern::Lit(Literal::Rat(-r))),
                    _ => Err(self.unexpected(&["number"])),
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Pattern::Lit(Literal::Str(s)))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "_" => Ok(Pattern::Wildcard),
                    "True" => Ok(Pattern::Lit(Literal::Bool(true))),
                    "False" => Ok(Pattern::Lit(Literal::Bool(false))),
                    "null" => Ok(Pattern::Lit(Literal::Null)),
                    _ if is_upper(&name) => {
                        let mut args = Vec::new();
                        if self.eat(&Tok::LParen) {
                            if !self.at(&Tok::RParen) {
                                loop {
                                    args.push(self.pattern()?);
                                    if !self.eat(&Tok::Comma) {
                                        break;
                                    }
                                }
                            }
                            self.expect(Tok::RParen)?;
                        }
                        Ok(Pattern::Ctor(name, args))
                    }
                    _ => Ok(Pattern::Var(name)),
                }
            }
            _ => Err(self.unexpected(&["pattern"])),
        }
    }
}
