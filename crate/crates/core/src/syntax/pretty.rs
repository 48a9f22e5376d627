//! Source rendering of syntax trees. Output reparses to a structurally
//! identical tree: binary and unary operators are always parenthesised.

use std::fmt::Write;

use super::ast::*;

pub fn literal(l: &Literal) -> String {
    match l {
        Literal::Bool(true) => "True".into(),
        Literal::Bool(false) => "False".into(),
        Literal::Int(n) => n.to_string(),
        Literal::Rat(r) => {
            if r < &num_rational::BigRational::from_integer(0.into()) {
                format!("(-{}/{})", -r.numer(), r.denom())
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        }
        Literal::Str(s) => quote(s),
        Literal::Null => "null".into(),
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Lit(Literal::Int(n)) if n.sign() == num_bigint::Sign::Minus => {
            format!("(-{})", -n)
        }
        ExprKind::Lit(l) => literal(l),
        ExprKind::Var(x) => x.clone(),
        ExprKind::This => "this".into(),
        ExprKind::Destiny => "destiny".into(),
        ExprKind::Deadline => "deadline".into(),
        ExprKind::Now => "now".into(),
        ExprKind::Ctor(c, args) if args.is_empty() => c.clone(),
        ExprKind::Ctor(c, args) => format!("{c}({})", list(args, expr)),
        ExprKind::Call(f, args) => format!("{f}({})", list(args, expr)),
        ExprKind::Case(s, branches) => {
            let mut out = format!("case {} {{ ", expr(s));
            for b in branches {
                let _ = write!(out, "{} => {}; ", pattern(&b.pattern), expr(&b.body));
            }
            out.push('}');
            out
        }
        ExprKind::If(c, t, f) => format!("(if {} then {} else {})", expr(c), expr(t), expr(f)),
        ExprKind::Unary(UnOp::Not, x) => format!("(!{})", expr(x)),
        ExprKind::Unary(UnOp::Neg, x) => format!("(-{})", expr(x)),
        ExprKind::Binary(op, a, b) => format!("({} {} {})", expr(a), op.symbol(), expr(b)),
    }
}

pub fn pattern(p: &Pattern) -> String {
    match p {
        Pattern::Wildcard => "_".into(),
        Pattern::Var(x) => x.clone(),
        Pattern::Lit(Literal::Int(n)) => n.to_string(),
        Pattern::Lit(Literal::Rat(r)) => {
            if r.numer().sign() == num_bigint::Sign::Minus {
                format!("-{}/{}", -r.numer(), r.denom())
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        }
        Pattern::Lit(l) => literal(l),
        Pattern::Ctor(c, args) if args.is_empty() => c.clone(),
        Pattern::Ctor(c, args) => format!("{c}({})", list(args, pattern)),
    }
}

pub fn guard(g: &Guard) -> String {
    match g {
        Guard::Expr(e) => expr(e),
        Guard::Future(x, _) => format!("{x}?"),
        Guard::Duration(b, w) => format!("duration({}, {})", expr(b), expr(w)),
        Guard::And(a, b) => format!("{} && {}", guard(a), guard(b)),
    }
}

pub fn annotations(a: &AnnotationSet) -> String {
    let mut parts = Vec::new();
    if let Some(e) = &a.deadline {
        parts.push(format!("Deadline: {}", expr(e)));
    }
    if let Some(e) = &a.critical {
        parts.push(format!("Critical: {}", expr(e)));
    }
    if let Some(e) = &a.cost {
        parts.push(format!("Cost: {}", expr(e)));
    }
    if let Some(e) = &a.scheduler {
        parts.push(format!("Scheduler: {}", expr(e)));
    }
    if parts.is_empty() {
        String::new()
    } else {
        format!("[{}] ", parts.join(", "))
    }
}

pub fn rhs(r: &Rhs) -> String {
    match r {
        Rhs::Expr(e) => expr(e),
        Rhs::New(c, args) => format!("new {c}({})", list(args, expr)),
        Rhs::Get(e) => format!("{}.get", expr(e)),
        Rhs::AsyncCall(o, m, args) => format!("{}!{m}({})", expr(o), list(args, expr)),
        Rhs::SyncCall(o, m, args) => format!("{}.{m}({})", expr(o), list(args, expr)),
    }
}

/// One statement, nested blocks indented by `indent` levels.
pub fn stmt(s: &Stmt, indent: usize) -> String {
    let pad = "    ".repeat(indent);
    let body = match &s.kind {
        StmtKind::Skip => "skip;".into(),
        StmtKind::Suspend => "suspend;".into(),
        StmtKind::Return(e) => format!("return {};", expr(e)),
        StmtKind::Await(g) => format!("await {};", guard(g)),
        StmtKind::Duration(b, w) => format!("duration({}, {});", expr(b), expr(w)),
        StmtKind::If(c, t, e) => {
            let mut out = format!("if {} {}", expr(c), block(t, indent));
            if let Some(e) = e {
                let _ = write!(out, " else {}", block(e, indent));
            }
            out
        }
        StmtKind::While(c, b) => format!("while {} {}", expr(c), block(b, indent)),
        StmtKind::Decl { ty, name, init, ann } => match init {
            Some(r) => format!("{}{ty} {name} = {};", annotations(ann), rhs(r)),
            None => format!("{}{ty} {name};", annotations(ann)),
        },
        StmtKind::Assign { target, rhs: r, ann } => {
            format!("{}{target} = {};", annotations(ann), rhs(r))
        }
        StmtKind::Discard { rhs: r, ann } => format!("{}{};", annotations(ann), rhs(r)),
        StmtKind::AwaitCall {
            target,
            callee,
            method,
            args,
            ann,
        } => {
            let t = target.as_ref().map(|t| format!("{t} = ")).unwrap_or_default();
            format!(
                "{}await {t}{}.{method}({});",
                annotations(ann),
                expr(callee),
                list(args, expr)
            )
        }
    };
    format!("{pad}{body}")
}

pub fn block(b: &[Stmt], indent: usize) -> String {
    if b.is_empty() {
        return "{ }".into();
    }
    let mut out = String::from("{\n");
    for s in b {
        out.push_str(&stmt(s, indent + 1));
        out.push('\n');
    }
    out.push_str(&"    ".repeat(indent));
    out.push('}');
    out
}

fn params(ps: &[Param]) -> String {
    list(ps, |p| format!("{} {}", p.ty, p.name))
}

fn type_params(tp: &[String]) -> String {
    if tp.is_empty() {
        String::new()
    } else {
        format!("<{}>", tp.join(", "))
    }
}

pub fn model(m: &ModelAst) -> String {
    let mut out = String::new();
    for d in &m.datatypes {
        let _ = write!(out, "data {}{}", d.name, type_params(&d.type_params));
        if !d.ctors.is_empty() {
            let ctors = d
                .ctors
                .iter()
                .map(|c| {
                    if c.args.is_empty() {
                        c.name.clone()
                    } else {
                        let args = list(&c.args, |(t, sel)| match sel {
                            Some(s) => format!("{t} {s}"),
                            None => t.to_string(),
                        });
                        format!("{}({args})", c.name)
                    }
                })
                .collect::<Vec<_>>()
                .join(" | ");
            let _ = write!(out, " = {ctors}");
        }
        out.push_str(";\n");
    }
    for f in &m.functions {
        let _ = writeln!(
            out,
            "def {} {}{}({}) = {};",
            f.ret,
            f.name,
            type_params(&f.type_params),
            params(&f.params),
            expr(&f.body)
        );
    }
    for i in &m.interfaces {
        let _ = writeln!(out, "interface {} {{", i.name);
        for s in &i.methods {
            let _ = writeln!(out, "    {} {}({});", s.ret, s.name, params(&s.params));
        }
        out.push_str("}\n");
    }
    for c in &m.classes {
        out.push_str(&annotations(&c.annotations));
        let _ = write!(out, "class {}({})", c.name, params(&c.params));
        if !c.implements.is_empty() {
            let _ = write!(out, " implements {}", c.implements.join(", "));
        }
        out.push_str(" {\n");
        for fd in &c.fields {
            match &fd.init {
                Some(e) => {
                    let _ = writeln!(out, "    {} {} = {};", fd.ty, fd.name, expr(e));
                }
                None => {
                    let _ = writeln!(out, "    {} {};", fd.ty, fd.name);
                }
            }
        }
        for md in &c.methods {
            let _ = writeln!(
                out,
                "    {}{} {}({}) {}",
                annotations(&md.annotations),
                md.sig.ret,
                md.sig.name,
                params(&md.sig.params),
                block(&md.body, 1)
            );
        }
        out.push_str("}\n");
    }
    if let Some(main) = &m.main {
        out.push_str(&block(main, 0));
        out.push('\n');
    }
    out
}
