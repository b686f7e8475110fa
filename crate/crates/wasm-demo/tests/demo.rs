use macfield::preprocess::{MNIST_HEIGHT, MNIST_WIDTH};
use macfield_wasm_demo::{
    run_familiarity_sweep, run_preprocess_digit, DigitField, DIGIT_SIDE, SWEEP_STEPS,
};

/// A 28x28 digit drawn from filled rectangles.
fn glyph(rects: &[(usize, usize, usize, usize)]) -> Vec<u8> {
    let mut px = vec![0u8; DIGIT_SIDE * DIGIT_SIDE];
    for &(x0, y0, x1, y1) in rects {
        for y in y0..y1 {
            for x in x0..x1 {
                px[y * DIGIT_SIDE + x] = 255;
            }
        }
    }
    px
}

fn one() -> Vec<u8> {
    glyph(&[(12, 4, 16, 24)])
}

fn seven() -> Vec<u8> {
    glyph(&[(6, 4, 22, 8), (17, 8, 21, 24)])
}

#[test]
fn sweep_rises_from_novel_to_familiar() {
    let rows = run_familiarity_sweep(10, 10, 200, 20, 50, 3).unwrap();
    assert_eq!(rows.len(), SWEEP_STEPS);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[SWEEP_STEPS - 1][0], 1.0);
    assert_eq!(rows[SWEEP_STEPS - 1][1], 1.0);
    assert!(rows[0][1] < 0.5);
    assert!(rows[SWEEP_STEPS - 1][2] > rows[0][2] + 0.5);
}

#[test]
fn sweep_rejects_bad_sizes() {
    assert!(run_familiarity_sweep(10, 10, 20, 21, 5, 0).is_err());
    assert!(run_familiarity_sweep(10, 10, 20, 0, 5, 0).is_err());
    assert!(run_familiarity_sweep(10, 10, 20, 5, 0, 0).is_err());
}

#[test]
fn preprocess_emits_digit_frame() {
    let frame = run_preprocess_digit(&seven(), 0.8).unwrap();
    assert_eq!((frame.width, frame.height), (MNIST_WIDTH, MNIST_HEIGHT));
    assert!(frame.count_ones() > 0);
    assert!(run_preprocess_digit(&[0u8; 10], 0.8).is_err());
}

#[test]
fn taught_drawings_are_recalled() {
    let mut field = DigitField::build(1).unwrap();
    assert!(field.teach_digit(&one(), 1).unwrap() > 0);
    assert!(field.teach_digit(&seven(), 7).unwrap() > 0);
    for (px, label) in [(one(), 1), (seven(), 7)] {
        let scores = field.recall_digit(&px).unwrap();
        assert_eq!(scores.len(), 10);
        let best = scores
            .iter()
            .enumerate()
            .max_by_key(|&(i, s)| (*s, std::cmp::Reverse(i)))
            .unwrap()
            .0;
        assert_eq!(best, label);
    }
    assert!(field.teach_digit(&one(), 10).is_err());
}
