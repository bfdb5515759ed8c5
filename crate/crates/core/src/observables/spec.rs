use serde::{Deserialize, Serialize};

use super::{Observable, TestFunctionSpec};

/// JSON form of an observable: nested `{"op": ..., ...}` trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Const { value: f64 },
    Integral { f: TestFunctionSpec, a: f64, b: f64 },
    Eval { f: TestFunctionSpec, t: f64 },
    LeftLim { f: TestFunctionSpec, t: f64 },
    Sum { args: Vec<ObservableSpec> },
    Product { args: Vec<ObservableSpec> },
    Scale { c: f64, arg: Box<ObservableSpec> },
}

impl ObservableSpec {
    pub fn build(&self) -> Observable {
        let fold = |args: &[ObservableSpec], unit: f64, join: fn(Observable, Observable) -> Observable| {
            let mut it = args.iter().map(|a| a.build());
            match it.next() {
                None => Observable::Const(unit),
                Some(first) => it.fold(first, join),
            }
        };
        match self {
            ObservableSpec::Const { value } => Observable::Const(*value),
            ObservableSpec::Integral { f, a, b } => Observable::integral(f.build(), *a, *b),
            ObservableSpec::Eval { f, t } => Observable::eval(f.build(), *t),
            ObservableSpec::LeftLim { f, t } => Observable::left_lim(f.build(), *t),
            ObservableSpec::Sum { args } => fold(args, 0.0, |a, b| a + b),
            ObservableSpec::Product { args } => fold(args, 1.0, |a, b| a * b),
            ObservableSpec::Scale { c, arg } => arg.build().scale(*c),
        }
    }
}
