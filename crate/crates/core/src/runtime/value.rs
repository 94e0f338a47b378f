//! Runtime values: 64-bit wrapping integers, IEEE doubles, and row-major
//! arrays of either.

use serde::Serialize;

use crate::ast::{BinOp, Intrinsic, ScalarKind, UnaryOp, VarDecl};
use crate::runtime::RuntimeError;
use crate::span::SourceSpan;

/// An array value. `rows`/`cols` give the shape; rank-1 arrays have
/// `cols == 1` and `rank == 1`, so "row `k`" is a single element and row
/// slicing works uniformly across ranks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayVal<T> {
    pub data: Vec<T>,
    pub rows: usize,
    pub cols: usize,
    pub rank: u8,
}

impl<T: Copy + Default> ArrayVal<T> {
    pub fn zeroed(rows: usize, cols: usize, rank: u8) -> Self {
        ArrayVal { data: vec![T::default(); rows * cols], rows, cols, rank }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    IntArray(ArrayVal<i64>),
    FloatArray(ArrayVal<f64>),
}

impl Value {
    /// Zero value of the right shape for a declaration.
    pub fn zero_for(decl: &VarDecl) -> Value {
        let float = decl.kind.is_float();
        match decl.dims.len() {
            0 => {
                if float {
                    Value::Float(0.0)
                } else {
                    Value::Int(0)
                }
            }
            1 => {
                let rows = decl.dims[0] as usize;
                if float {
                    Value::FloatArray(ArrayVal::zeroed(rows, 1, 1))
                } else {
                    Value::IntArray(ArrayVal::zeroed(rows, 1, 1))
                }
            }
            _ => {
                let rows = decl.dims[0] as usize;
                let cols = decl.dims[1] as usize;
                if float {
                    Value::FloatArray(ArrayVal::zeroed(rows, cols, 2))
                } else {
                    Value::IntArray(ArrayVal::zeroed(rows, cols, 2))
                }
            }
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self, Value::IntArray(_) | Value::FloatArray(_))
    }

    /// Integer view of a scalar (floats truncate toward zero, like a C cast).
    pub fn as_int(&self) -> i64 {
        match self {
            Value::Int(v) => *v,
            Value::Float(v) => *v as i64,
            _ => 0,
        }
    }

    pub fn as_float(&self) -> f64 {
        match self {
            Value::Int(v) => *v as f64,
            Value::Float(v) => *v,
            _ => 0.0,
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Int(v) => *v != 0,
            Value::Float(v) => *v != 0.0,
            _ => true,
        }
    }

    /// Convert a scalar for storage in a slot of kind `kind` (C assignment
    /// conversion: float→int truncates, int→float widens).
    pub fn convert_to(&self, kind: ScalarKind) -> Value {
        if kind.is_float() {
            Value::Float(self.as_float())
        } else {
            Value::Int(self.as_int())
        }
    }
}

/// Apply a binary operator with C-like semantics: integer ops wrap at 64
/// bits, any float operand promotes both sides, comparisons yield 0/1.
/// `&&`/`||` are handled by the interpreter (short-circuit), not here.
pub fn binop(op: BinOp, a: &Value, b: &Value, span: &SourceSpan) -> Result<Value, RuntimeError> {
    let float = matches!(a, Value::Float(_)) || matches!(b, Value::Float(_));
    if op.is_comparison() {
        let r = if float {
            let (x, y) = (a.as_float(), b.as_float());
            match op {
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                BinOp::Gt => x > y,
                BinOp::Ge => x >= y,
                BinOp::Eq => x == y,
                BinOp::Ne => x != y,
                _ => unreachable!(),
            }
        } else {
            let (x, y) = (a.as_int(), b.as_int());
            match op {
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                BinOp::Gt => x > y,
                BinOp::Ge => x >= y,
                BinOp::Eq => x == y,
                BinOp::Ne => x != y,
                _ => unreachable!(),
            }
        };
        return Ok(Value::Int(r as i64));
    }
    if float {
        let (x, y) = (a.as_float(), b.as_float());
        let r = match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => x / y,
            BinOp::Rem => {
                return Err(RuntimeError::Invalid {
                    span: span.clone(),
                    message: "`%` on floating-point operands".to_string(),
                })
            }
            BinOp::And | BinOp::Or => unreachable!("short-circuit ops evaluated by caller"),
            _ => unreachable!(),
        };
        Ok(Value::Float(r))
    } else {
        let (x, y) = (a.as_int(), b.as_int());
        let r = match op {
            BinOp::Add => x.wrapping_add(y),
            BinOp::Sub => x.wrapping_sub(y),
            BinOp::Mul => x.wrapping_mul(y),
            BinOp::Div => {
                if y == 0 {
                    return Err(RuntimeError::DivByZero { span: span.clone() });
                }
                x.wrapping_div(y)
            }
            BinOp::Rem => {
                if y == 0 {
                    return Err(RuntimeError::DivByZero { span: span.clone() });
                }
                x.wrapping_rem(y)
            }
            BinOp::And | BinOp::Or => unreachable!("short-circuit ops evaluated by caller"),
            _ => unreachable!(),
        };
        Ok(Value::Int(r))
    }
}

pub fn unop(op: UnaryOp, v: &Value) -> Value {
    match op {
        UnaryOp::Neg => match v {
            Value::Float(f) => Value::Float(-f),
            other => Value::Int(other.as_int().wrapping_neg()),
        },
        UnaryOp::Not => Value::Int((!v.truthy()) as i64),
    }
}

pub fn intrinsic(f: Intrinsic, args: &[Value]) -> Value {
    match f {
        Intrinsic::Sqrt => Value::Float(args[0].as_float().sqrt()),
        Intrinsic::Fabs => Value::Float(args[0].as_float().abs()),
        Intrinsic::Min | Intrinsic::Max => {
            let both_int = matches!(args[0], Value::Int(_)) && matches!(args[1], Value::Int(_));
            if both_int {
                let (a, b) = (args[0].as_int(), args[1].as_int());
                Value::Int(if f == Intrinsic::Min { a.min(b) } else { a.max(b) })
            } else {
                let (a, b) = (args[0].as_float(), args[1].as_float());
                Value::Float(if f == Intrinsic::Min { a.min(b) } else { a.max(b) })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp() -> SourceSpan {
        SourceSpan::synthetic()
    }

    #[test]
    fn integer_ops_wrap() {
        let v = binop(BinOp::Add, &Value::Int(i64::MAX), &Value::Int(1), &sp()).unwrap();
        assert_eq!(v, Value::Int(i64::MIN));
        let v = binop(BinOp::Mul, &Value::Int(i64::MAX), &Value::Int(2), &sp()).unwrap();
        assert_eq!(v, Value::Int(-2));
    }

    #[test]
    fn mixed_operands_promote_to_float() {
        let v = binop(BinOp::Div, &Value::Int(1), &Value::Float(2.0), &sp()).unwrap();
        assert_eq!(v, Value::Float(0.5));
    }

    #[test]
    fn integer_division_truncates_and_checks_zero() {
        let v = binop(BinOp::Div, &Value::Int(-7), &Value::Int(2), &sp()).unwrap();
        assert_eq!(v, Value::Int(-3));
        assert!(binop(BinOp::Div, &Value::Int(1), &Value::Int(0), &sp()).is_err());
        assert!(binop(BinOp::Rem, &Value::Int(1), &Value::Int(0), &sp()).is_err());
    }

    #[test]
    fn float_division_by_zero_follows_ieee() {
        let v = binop(BinOp::Div, &Value::Float(1.0), &Value::Float(0.0), &sp()).unwrap();
        assert_eq!(v, Value::Float(f64::INFINITY));
    }

    #[test]
    fn comparisons_yield_int() {
        let v = binop(BinOp::Lt, &Value::Int(1), &Value::Int(2), &sp()).unwrap();
        assert_eq!(v, Value::Int(1));
        let v = binop(BinOp::Ge, &Value::Float(1.0), &Value::Float(2.0), &sp()).unwrap();
        assert_eq!(v, Value::Int(0));
    }

    #[test]
    fn intrinsics() {
        assert_eq!(intrinsic(Intrinsic::Sqrt, &[Value::Float(9.0)]), Value::Float(3.0));
        assert_eq!(intrinsic(Intrinsic::Fabs, &[Value::Float(-2.5)]), Value::Float(2.5));
        assert_eq!(intrinsic(Intrinsic::Min, &[Value::Int(3), Value::Int(5)]), Value::Int(3));
        assert_eq!(
            intrinsic(Intrinsic::Max, &[Value::Int(3), Value::Float(5.0)]),
            Value::Float(5.0)
        );
    }
}
