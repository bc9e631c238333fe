use std::cell::RefCell;
use std::rc::Rc;

use super::value::{Symbol, Value};

/// Lexical scope: a frame of bindings plus an optional parent.
#[derive(Clone)]
pub struct Environment(Rc<Frame>);

struct Frame {
    bindings: RefCell<Vec<(Symbol, Value)>>,
    parent: Option<Environment>,
}

impl Environment {
    pub fn root() -> Self {
        Environment(Rc::new(Frame {
            bindings: RefCell::new(Vec::new()),
            parent: None,
        }))
    }

    pub fn child(&self) -> Self {
        self.child_with(Vec::new())
    }

    pub fn child_with(&self, bindings: Vec<(Symbol, Value)>) -> Self {
        Environment(Rc::new(Frame {
            bindings: RefCell::new(bindings),
            parent: Some(self.clone()),
        }))
    }

    /// Binds in this frame, replacing an existing binding of the same name.
    pub fn define(&self, name: Symbol, value: Value) {
        let mut bindings = self.0.bindings.borrow_mut();
        match bindings.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => bindings.push((name, value)),
        }
    }

    /// Drops every binding in this frame.
    pub fn clear(&self) {
        let old = std::mem::take(&mut *self.0.bindings.borrow_mut());
        drop(old);
    }

    /// Innermost binding of `name`, if any.
    pub fn lookup(&self, name: Symbol) -> Option<Value> {
        let mut frame = Some(self);
        while let Some(env) = frame {
            if let Some((_, v)) = env.0.bindings.borrow().iter().rev().find(|(n, _)| *n == name) {
                return Some(v.clone());
            }
            frame = env.0.parent.as_ref();
        }
        None
    }
}
