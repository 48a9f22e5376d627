//! Static well-formedness: name resolution, arities, reserved names and
//! annotation placement. Typing is nominal and arity-based only.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::Diagnostic;

const BUILTIN_TYPES: [(&str, usize); 5] =
    [("Int", 0), ("Rat", 0), ("Bool", 0), ("String", 0), ("Fut", 1)];

/// Check a parsed model. Every violation is reported; checking never stops
/// at the first problem.
pub fn check_model(m: &ModelAst) -> Vec<Diagnostic> {
    let mut cx = Checker::new(m);
    cx.run();
    cx.diags
}

struct Checker<'m> {
    model: &'m ModelAst,
    types: HashMap<&'m str, usize>,
    ctors: HashMap<&'m str, usize>,
    functions: HashMap<&'m str, usize>,
    classes: HashMap<&'m str, &'m ClassDecl>,
    interfaces: HashMap<&'m str, &'m InterfaceDecl>,
    /// method name -> arities declared anywhere
    methods: HashMap<&'m str, HashSet<usize>>,
    diags: Vec<Diagnostic>,
}

/// Which implicit names an expression may mention.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Function,
    Method,
    Policy,
    Field,
}

impl<'m> Checker<'m> {
    fn new(model: &'m ModelAst) -> Self {
        let mut cx = Checker {
            model,
            types: BUILTIN_TYPES.iter().copied().collect(),
            ctors: HashMap::new(),
            functions: HashMap::new(),
            classes: HashMap::new(),
            interfaces: HashMap::new(),
            methods: HashMap::new(),
            diags: Vec::new(),
        };
        for d in &model.datatypes {
            if cx.types.insert(&d.name, d.type_params.len()).is_some() {
                cx.err(d.pos, format!("duplicate type {}", d.name));
            }
            for c in &d.ctors {
                if cx.ctors.insert(&c.name, c.args.len()).is_some() {
                    cx.err(c.pos, format!("duplicate constructor {}", c.name));
                }
            }
        }
        // later definitions shadow earlier ones
        for f in &model.functions {
            cx.functions.insert(&f.name, f.params.len());
        }
        for i in &model.interfaces {
            if cx.types.insert(&i.name, 0).is_some() {
                cx.err(i.pos, format!("duplicate type {}", i.name));
            }
            cx.interfaces.insert(&i.name, i);
            for s in &i.methods {
                cx.methods.entry(&s.name).or_default().insert(s.params.len());
            }
        }
        for c in &model.classes {
            if cx.classes.insert(&c.name, c).is_some() {
                cx.err(c.pos, format!("duplicate class {}", c.name));
            }
            for md in &c.methods {
                cx.methods
                    .entry(&md.sig.name)
                    .or_default()
                    .insert(md.sig.params.len());
            }
        }
        cx
    }

    fn err(&mut self, pos: Pos, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(pos, msg));
    }

    fn run(&mut self) {
        let m = self.model;
        for d in &m.datatypes {
            for c in &d.ctors {
                for (t, _) in &c.args {
                    self.check_type(t, &d.type_params);
                }
            }
        }
        for f in &m.functions {
            self.check_type(&f.ret, &f.type_params);
            let mut scope = HashSet::new();
            for p in &f.params {
                self.check_type(&p.ty, &f.type_params);
                scope.insert(p.name.clone());
            }
            self.check_expr(&f.body, &scope, Ctx::Function);
        }
        for i in &m.interfaces {
            for s in &i.methods {
                self.check_type(&s.ret, &[]);
                for p in &s.params {
                    self.check_type(&p.ty, &[]);
                }
            }
        }
        for c in &m.classes {
            self.check_class(c);
        }
        if let Some(main) = &m.main {
            let locals = self.collect_locals(main, &[]);
            let mut scope: HashSet<String> = locals.into_iter().collect();
            scope.extend(PROCESS_LOCALS.iter().map(|s| s.to_string()));
            scope.insert("this".into());
            self.check_block(main, &scope);
        }
    }

    fn check_type(&mut self, t: &TypeRef, params: &[String]) {
        if params.contains(&t.name) {
            if !t.args.is_empty() {
                self.err(t.pos, format!("type parameter {} takes no arguments", t.name));
            }
            return;
        }
        match self.types.get(t.name.as_str()) {
            None => self.err(t.pos, format!("unknown type {}", t.name)),
            Some(&n) if n != t.args.len() => self.err(
                t.pos,
                format!("type {} expects {} argument(s), got {}", t.name, n, t.args.len()),
            ),
            _ => {}
        }
        for a in &t.args {
            self.check_type(a, params);
        }
    }

    fn attributes(c: &ClassDecl) -> HashSet<String> {
        c.params
            .iter()
            .map(|p| p.name.clone())
            .chain(c.fields.iter().map(|f| f.name.clone()))
            .chain(std::iter::once("this".to_string()))
            .collect()
    }

    fn check_class(&mut self, c: &'m ClassDecl) {
        for p in &c.params {
            self.check_type(&p.ty, &[]);
        }
        for iname in &c.implements {
            match self.interfaces.get(iname.as_str()).copied() {
                None => self.err(c.pos, format!("unknown interface {iname}")),
                Some(i) => {
                    for s in &i.methods {
                        match c.method(&s.name) {
                            None => self.err(
                                c.pos,
                                format!("class {} does not define {}.{}", c.name, iname, s.name),
                            ),
                            Some(md) if md.sig.params.len() != s.params.len() => self.err(
                                md.sig.pos,
                                format!(
                                    "method {} has {} parameter(s) but interface {} declares {}",
                                    s.name,
                                    md.sig.params.len(),
                                    iname,
                                    s.params.len()
                                ),
                            ),
                            _ => {}
                        }
                    }
                }
            }
        }
        let attrs = Self::attributes(c);
        let mut seen = HashSet::new();
        for f in &c.fields {
            self.check_type(&f.ty, &[]);
            if !seen.insert(f.name.as_str()) || c.params.iter().any(|p| p.name == f.name) {
                self.err(f.pos, format!("duplicate attribute {}", f.name));
            }
            if let Some(e) = &f.init {
                self.check_expr(e, &attrs, Ctx::Field);
            }
        }
        self.check_class_annotations(&c.annotations, c.pos);
        if let Some(p) = &c.annotations.scheduler {
            let mut scope = attrs.clone();
            scope.insert("queue".into());
            self.check_expr(p, &scope, Ctx::Policy);
        }
        let mut mnames = HashSet::new();
        for md in &c.methods {
            if !mnames.insert(md.sig.name.as_str()) {
                self.err(md.sig.pos, format!("duplicate method {}", md.sig.name));
            }
            self.check_method(c, md, &attrs);
        }
    }

    fn check_class_annotations(&mut self, a: &AnnotationSet, pos: Pos) {
        if a.deadline.is_some() || a.critical.is_some() {
            self.err(pos, "Deadline and Critical annotations belong on method calls");
        }
        if a.cost.is_some() {
            self.err(pos, "Cost annotations belong on method declarations");
        }
    }

    fn check_method(&mut self, c: &ClassDecl, md: &MethodDecl, attrs: &HashSet<String>) {
        let a = &md.annotations;
        if a.deadline.is_some() || a.critical.is_some() {
            self.err(md.sig.pos, "Deadline and Critical annotations belong on method calls");
        }
        if a.scheduler.is_some() {
            self.err(
                md.sig.pos,
                "Scheduler annotations belong on classes and object creation",
            );
        }
        self.check_type(&md.sig.ret, &[]);
        let mut formals = HashSet::new();
        for p in &md.sig.params {
            self.check_type(&p.ty, &[]);
            if RESERVED_NAMES.contains(&p.name.as_str()) {
                self.err(p.pos, format!("reserved name {} cannot be declared", p.name));
            }
            if !formals.insert(p.name.clone()) {
                self.err(p.pos, format!("duplicate parameter {}", p.name));
            }
        }
        if let Some(cost) = &a.cost {
            self.check_expr(cost, &formals, Ctx::Method);
        }
        let locals = self.collect_locals(&md.body, &md.sig.params);
        let mut scope = attrs.clone();
        scope.extend(formals);
        scope.extend(locals);
        scope.extend(PROCESS_LOCALS.iter().map(|s| s.to_string()));
        let _ = c;
        self.check_block(&md.body, &scope);
    }

    /// Declared locals of a body, reporting reserved and duplicate names.
    fn collect_locals(&mut self, body: &[Stmt], params: &[Param]) -> Vec<String> {
        let mut seen: HashSet<String> = params.iter().map(|p| p.name.clone()).collect();
        let mut out = Vec::new();
        for (name, ty, pos) in declared_locals(body) {
            self.check_type(&ty, &[]);
            if RESERVED_NAMES.contains(&name.as_str()) {
                self.err(pos, format!("reserved name {name} cannot be declared"));
            } else if !seen.insert(name.clone()) {
                self.err(pos, format!("duplicate local {name}"));
            }
            out.push(name);
        }
        out
    }

    fn check_block(&mut self, b: &[Stmt], scope: &HashSet<String>) {
        for s in b {
            self.check_stmt(s, scope);
        }
    }

    fn check_target(&mut self, target: &str, pos: Pos, scope: &HashSet<String>) {
        if PROCESS_LOCALS.contains(&target) && target != "value" {
            self.err(pos, format!("{target} is read-only"));
        } else if target == "this" || !scope.contains(target) {
            self.err(pos, format!("unknown variable {target}"));
        }
    }

    fn check_stmt(&mut self, s: &Stmt, scope: &HashSet<String>) {
        match &s.kind {
            StmtKind::Skip | StmtKind::Suspend => {}
            StmtKind::Return(e) => self.check_expr(e, scope, Ctx::Method),
            StmtKind::Await(g) => self.check_guard(g, scope),
            StmtKind::Duration(b, w) => {
                self.check_expr(b, scope, Ctx::Method);
                self.check_expr(w, scope, Ctx::Method);
            }
            StmtKind::If(c, t, e) => {
                self.check_expr(c, scope, Ctx::Method);
                self.check_block(t, scope);
                if let Some(e) = e {
                    self.check_block(e, scope);
                }
            }
            StmtKind::While(c, b) => {
                self.check_expr(c, scope, Ctx::Method);
                self.check_block(b, scope);
            }
            StmtKind::Decl { init, ann, .. } => {
                if let Some(r) = init {
                    self.check_rhs(r, ann, s.pos, scope);
                } else if !ann.is_empty() {
                    self.err(s.pos, "annotation on a declaration without initializer");
                }
            }
            StmtKind::Assign { target, rhs, ann } => {
                self.check_target(target, s.pos, scope);
                self.check_rhs(rhs, ann, s.pos, scope);
            }
            StmtKind::Discard { rhs, ann } => self.check_rhs(rhs, ann, s.pos, scope),
            StmtKind::AwaitCall {
                target,
                callee,
                method,
                args,
                ann,
            } => {
                if let Some(t) = target {
                    self.check_target(t, s.pos, scope);
                }
                let rhs = Rhs::SyncCall(callee.clone(), method.clone(), args.clone());
                self.check_rhs(&rhs, ann, s.pos, scope);
            }
        }
    }

    fn check_rhs(&mut self, r: &Rhs, ann: &AnnotationSet, pos: Pos, scope: &HashSet<String>) {
        if ann.cost.is_some() {
            self.err(pos, "Cost annotations belong on method declarations");
        }
        if (ann.deadline.is_some() || ann.critical.is_some()) && !r.is_call() {
            self.err(pos, "Deadline and Critical annotations belong on method calls");
        }
        if ann.scheduler.is_some() && !matches!(r, Rhs::New(..)) {
            self.err(
                pos,
                "Scheduler annotations belong on classes and object creation",
            );
        }
        for e in ann.deadline.iter().chain(ann.critical.iter()) {
            self.check_expr(e, scope, Ctx::Method);
        }
        match r {
            Rhs::Expr(e) | Rhs::Get(e) => self.check_expr(e, scope, Ctx::Method),
            Rhs::New(cname, args) => {
                for a in args {
                    self.check_expr(a, scope, Ctx::Method);
                }
                match self.classes.get(cname.as_str()).copied() {
                    None => self.err(pos, format!("unknown class {cname}")),
                    Some(c) => {
                        if c.params.len() != args.len() {
                            self.err(
                                pos,
                                format!(
                                    "class {} expects {} argument(s), got {}",
                                    cname,
                                    c.params.len(),
                                    args.len()
                                ),
                            );
                        }
                        if let Some(p) = &ann.scheduler {
                            let mut sc = Self::attributes(c);
                            sc.insert("queue".into());
                            self.check_expr(p, &sc, Ctx::Policy);
                        }
                    }
                }
            }
            Rhs::AsyncCall(o, m, args) | Rhs::SyncCall(o, m, args) => {
                self.check_expr(o, scope, Ctx::Method);
                for a in args {
                    self.check_expr(a, scope, Ctx::Method);
                }
                match self.methods.get(m.as_str()) {
                    None => self.err(pos, format!("unknown method {m}")),
                    Some(ar) if !ar.contains(&args.len()) => self.err(
                        pos,
                        format!("no method {} takes {} argument(s)", m, args.len()),
                    ),
                    _ => {}
                }
            }
        }
    }

    fn check_guard(&mut self, g: &Guard, scope: &HashSet<String>) {
        match g {
            Guard::Expr(e) => self.check_expr(e, scope, Ctx::Method),
            Guard::Future(x, pos) => {
                if !scope.contains(x) {
                    self.err(*pos, format!("unknown variable {x}"));
                }
            }
            Guard::Duration(b, w) => {
                self.check_expr(b, scope, Ctx::Method);
                self.check_expr(w, scope, Ctx::Method);
            }
            Guard::And(a, b) => {
                self.check_guard(a, scope);
                self.check_guard(b, scope);
            }
        }
    }

    fn check_expr(&mut self, e: &Expr, scope: &HashSet<String>, ctx: Ctx) {
        match &e.kind {
            ExprKind::Lit(_) | ExprKind::Now => {}
            ExprKind::Var(x) => {
                if !scope.contains(x) {
                    let why = if ctx == Ctx::Function {
                        " (function bodies may only use their parameters)"
                    } else {
                        ""
                    };
                    self.err(e.pos, format!("unknown variable {x}{why}"));
                }
            }
            ExprKind::This => {
                if ctx == Ctx::Function {
                    self.err(e.pos, "this is not available in function bodies");
                }
            }
            ExprKind::Destiny | ExprKind::Deadline => {
                if ctx != Ctx::Method {
                    let name = if e.kind == ExprKind::Destiny {
                        "destiny"
                    } else {
                        "deadline"
                    };
                    self.err(e.pos, format!("{name} may only appear inside method bodies"));
                }
            }
            ExprKind::Ctor(c, args) => {
                match self.ctors.get(c.as_str()) {
                    None => self.err(e.pos, format!("unknown constructor {c}")),
                    Some(&n) if n != args.len() => self.err(
                        e.pos,
                        format!("constructor {} expects {} argument(s), got {}", c, n, args.len()),
                    ),
                    _ => {}
                }
                for a in args {
                    self.check_expr(a, scope, ctx);
                }
            }
            ExprKind::Call(f, args) => {
                match self.functions.get(f.as_str()) {
                    None => self.err(e.pos, format!("unknown function {f}")),
                    Some(&n) if n != args.len() => self.err(
                        e.pos,
                        format!("function {} expects {} argument(s), got {}", f, n, args.len()),
                    ),
                    _ => {}
                }
                for a in args {
                    self.check_expr(a, scope, ctx);
                }
            }
            ExprKind::Case(s, branches) => {
                self.check_expr(s, scope, ctx);
                if branches.is_empty() {
                    self.err(e.pos, "case expression needs at least one branch");
                }
                for b in branches {
                    let mut inner = scope.clone();
                    self.check_pattern(&b.pattern, &mut inner, e.pos);
                    self.check_expr(&b.body, &inner, ctx);
                }
            }
            ExprKind::If(c, t, f) => {
                self.check_expr(c, scope, ctx);
                self.check_expr(t, scope, ctx);
                self.check_expr(f, scope, ctx);
            }
            ExprKind::Unary(_, x) => self.check_expr(x, scope, ctx),
            ExprKind::Binary(_, a, b) => {
                self.check_expr(a, scope, ctx);
                self.check_expr(b, scope, ctx);
            }
        }
    }

    fn check_pattern(&mut self, p: &Pattern, scope: &mut HashSet<String>, pos: Pos) {
        match p {
            Pattern::Wildcard | Pattern::Lit(_) => {}
            Pattern::Var(x) => {
                scope.insert(x.clone());
            }
            Pattern::Ctor(c, args) => {
                match self.ctors.get(c.as_str()) {
                    None => self.err(pos, format!("unknown constructor {c} in pattern")),
                    Some(&n) if n != args.len() => self.err(
                        pos,
                        format!("constructor {} expects {} argument(s), got {}", c, n, args.len()),
                    ),
                    _ => {}
                }
                for a in args {
                    self.check_pattern(a, scope, pos);
                }
            }
        }
    }
}
