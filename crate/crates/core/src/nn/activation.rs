/// Sigmoid with the argument clamped so the result stays strictly inside
/// (0, 1) in f64 arithmetic. Beyond |x| = 36 the unclamped value would round
/// to exactly 0.0 or 1.0.
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-36.0, 36.0);
    1.0 / (1.0 + (-x).exp())
}

/// Derivative of sigmoid expressed through its output value.
pub fn sigmoid_grad_from_output(s: f64) -> f64 {
    s * (1.0 - s)
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn relu6(x: f64) -> f64 {
    x.clamp(0.0, 6.0)
}

pub fn relu6_grad(x: f64) -> f64 {
    if x > 0.0 && x < 6.0 {
        1.0
    } else {
        0.0
    }
}
