//! Core-language normalisation: synchronous calls become an asynchronous
//! call plus a blocking read, and omitted annotations get their defaults.
//! Applying it twice gives the same model as applying it once.

use std::sync::Arc;

use super::ast::*;

/// Deadline of a call without a `Deadline` annotation.
pub fn default_deadline() -> Expr {
    Expr::ctor("InfDuration", vec![])
}

/// Cost of a method without a `Cost` annotation.
pub fn default_cost() -> Expr {
    Expr::ctor("Duration", vec![Expr::int(0)])
}

/// Policy of a class without a `Scheduler` annotation.
pub fn default_scheduler() -> Expr {
    Expr::call("default", vec![Expr::var("queue")])
}

fn default_critical() -> Expr {
    Expr::synth(ExprKind::Lit(Literal::Bool(false)))
}

pub fn desugar(mut m: ModelAst) -> ModelAst {
    let lookup = Lookup::new(&m);
    let mut classes = std::mem::take(&mut m.classes);
    for c in &mut classes {
        if c.annotations.scheduler.is_none() {
            c.annotations.scheduler = Some(default_scheduler());
        }
        let attrs: Vec<(String, TypeRef)> = c
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty.clone()))
            .chain(c.fields.iter().map(|f| (f.name.clone(), f.ty.clone())))
            .collect();
        for md in &mut c.methods {
            if md.annotations.cost.is_none() {
                md.annotations.cost = Some(default_cost());
            }
            let mut vars = attrs.clone();
            vars.extend(md.sig.params.iter().map(|p| (p.name.clone(), p.ty.clone())));
            vars.extend(declared_locals(&md.body).into_iter().map(|(n, t, _)| (n, t)));
            let mut cx = Cx::new(&lookup, vars, &md.body);
            md.body = cx.block(&md.body);
        }
    }
    m.classes = classes;
    if let Some(main) = m.main.take() {
        let vars = declared_locals(&main)
            .into_iter()
            .map(|(n, t, _)| (n, t))
            .collect();
        let mut cx = Cx::new(&lookup, vars, &main);
        m.main = Some(cx.block(&main));
    }
    m
}

/// Read-only view of the declarations needed while rewriting.
struct Lookup {
    /// method name -> declared return type (first declaration wins)
    returns: Vec<(String, TypeRef)>,
    class_schedulers: Vec<(String, Option<Expr>)>,
}

impl Lookup {
    fn new(m: &ModelAst) -> Self {
        let mut returns = Vec::new();
        for i in &m.interfaces {
            for s in &i.methods {
                returns.push((s.name.clone(), s.ret.clone()));
            }
        }
        for c in &m.classes {
            for md in &c.methods {
                returns.push((md.sig.name.clone(), md.sig.ret.clone()));
            }
        }
        let class_schedulers = m
            .classes
            .iter()
            .map(|c| (c.name.clone(), c.annotations.scheduler.clone()))
            .collect();
        Lookup {
            returns,
            class_schedulers,
        }
    }

    fn return_type(&self, method: &str) -> Option<&TypeRef> {
        self.returns.iter().find(|(n, _)| n == method).map(|(_, t)| t)
    }

    fn class_scheduler(&self, class: &str) -> Expr {
        self.class_schedulers
            .iter()
            .find(|(n, _)| n == class)
            .and_then(|(_, s)| s.clone())
            .unwrap_or_else(default_scheduler)
    }
}

struct Cx<'a> {
    lookup: &'a Lookup,
    vars: Vec<(String, TypeRef)>,
    next: usize,
}

fn max_fut_index(b: &[Stmt]) -> usize {
    declared_locals(b)
        .iter()
        .filter_map(|(n, _, _)| n.strip_prefix("__fut")?.parse::<usize>().ok())
        .map(|k| k + 1)
        .max()
        .unwrap_or(0)
}

impl<'a> Cx<'a> {
    fn new(lookup: &'a Lookup, vars: Vec<(String, TypeRef)>, body: &[Stmt]) -> Self {
        Cx {
            lookup,
            vars,
            next: max_fut_index(body),
        }
    }

    fn fresh(&mut self) -> String {
        let n = format!("__fut{}", self.next);
        self.next += 1;
        n
    }

    fn var_type(&self, x: &str) -> Option<TypeRef> {
        self.vars.iter().rev().find(|(n, _)| n == x).map(|(_, t)| t.clone())
    }

    fn result_type(&self, target: Option<&TypeRef>, method: &str) -> TypeRef {
        target
            .cloned()
            .or_else(|| self.lookup.return_type(method).cloned())
            .unwrap_or_else(|| TypeRef::simple("Unit"))
    }

    fn block(&mut self, b: &[Stmt]) -> Block {
        let mut out = Vec::with_capacity(b.len());
        for s in b {
            self.stmt(s, &mut out);
        }
        Arc::from(out)
    }

    fn call_ann(ann: &AnnotationSet) -> AnnotationSet {
        let mut a = ann.clone();
        a.deadline.get_or_insert_with(default_deadline);
        a.critical.get_or_insert_with(default_critical);
        a
    }

    /// `Fut<T> f = [ann] o!m(args);` with a fresh `f`.
    fn spawn(
        &mut self,
        out: &mut Vec<Stmt>,
        pos: Pos,
        res: TypeRef,
        o: &Expr,
        m: &str,
        args: &[Expr],
        ann: &AnnotationSet,
    ) -> String {
        let f = self.fresh();
        let ty = TypeRef::generic("Fut", vec![res]);
        self.vars.push((f.clone(), ty.clone()));
        out.push(Stmt::new(
            StmtKind::Decl {
                ty,
                name: f.clone(),
                init: Some(Rhs::AsyncCall(o.clone(), m.to_string(), args.to_vec())),
                ann: Self::call_ann(ann),
            },
            pos,
        ));
        f
    }

    fn get(f: &str) -> Rhs {
        Rhs::Get(Expr::var(f))
    }

    fn fill_rhs(&self, r: &Rhs, ann: &AnnotationSet) -> AnnotationSet {
        match r {
            Rhs::AsyncCall(..) => Self::call_ann(ann),
            Rhs::New(c, _) if ann.scheduler.is_none() => {
                let mut a = ann.clone();
                a.scheduler = Some(self.lookup.class_scheduler(c));
                a
            }
            _ => ann.clone(),
        }
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<Stmt>) {
        let pos = s.pos;
        match &s.kind {
            StmtKind::If(c, t, e) => {
                let t = self.block(t);
                let e = e.as_ref().map(|e| self.block(e));
                out.push(Stmt::new(StmtKind::If(c.clone(), t, e), pos));
            }
            StmtKind::While(c, b) => {
                let b = self.block(b);
                out.push(Stmt::new(StmtKind::While(c.clone(), b), pos));
            }
            StmtKind::Decl {
                ty,
                name,
                init: Some(Rhs::SyncCall(o, m, args)),
                ann,
            } => {
                let f = self.spawn(out, pos, ty.clone(), o, m, args, ann);
                out.push(Stmt::new(
                    StmtKind::Decl {
                        ty: ty.clone(),
                        name: name.clone(),
                        init: Some(Self::get(&f)),
                        ann: AnnotationSet::default(),
                    },
                    pos,
                ));
            }
            StmtKind::Assign {
                target,
                rhs: Rhs::SyncCall(o, m, args),
                ann,
            } => {
                let res = self.result_type(self.var_type(target).as_ref(), m);
                let f = self.spawn(out, pos, res, o, m, args, ann);
                out.push(Stmt::new(
                    StmtKind::Assign {
                        target: target.clone(),
                        rhs: Self::get(&f),
                        ann: AnnotationSet::default(),
                    },
                    pos,
                ));
            }
            StmtKind::Discard {
                rhs: Rhs::SyncCall(o, m, args),
                ann,
            } => {
                let res = self.result_type(None, m);
                let f = self.spawn(out, pos, res, o, m, args, ann);
                out.push(Stmt::new(
                    StmtKind::Discard {
                        rhs: Self::get(&f),
                        ann: AnnotationSet::default(),
                    },
                    pos,
                ));
            }
            StmtKind::AwaitCall {
                target,
                callee,
                method,
                args,
                ann,
            } => {
                let tty = target.as_deref().and_then(|t| self.var_type(t));
                let res = self.result_type(tty.as_ref(), method);
                let f = self.spawn(out, pos, res, callee, method, args, ann);
                out.push(Stmt::new(StmtKind::Await(Guard::Future(f.clone(), pos)), pos));
                let rhs = Self::get(&f);
                let kind = match target {
                    Some(t) => StmtKind::Assign {
                        target: t.clone(),
                        rhs,
                        ann: AnnotationSet::default(),
                    },
                    None => StmtKind::Discard {
                        rhs,
                        ann: AnnotationSet::default(),
                    },
                };
                out.push(Stmt::new(kind, pos));
            }
            StmtKind::Decl {
                ty,
                name,
                init: Some(r),
                ann,
            } => out.push(Stmt::new(
                StmtKind::Decl {
                    ty: ty.clone(),
                    name: name.clone(),
                    init: Some(r.clone()),
                    ann: self.fill_rhs(r, ann),
                },
                pos,
            )),
            StmtKind::Assign { target, rhs, ann } => out.push(Stmt::new(
                StmtKind::Assign {
                    target: target.clone(),
                    rhs: rhs.clone(),
                    ann: self.fill_rhs(rhs, ann),
                },
                pos,
            )),
            StmtKind::Discard { rhs, ann } => out.push(Stmt::new(
                StmtKind::Discard {
                    rhs: rhs.clone(),
                    ann: self.fill_rhs(rhs, ann),
                },
                pos,
            )),
            _ => out.push(s.clone()),
        }
    }
}
