/// Strided row/column view of a matrix stored in a flat slice.
#[derive(Clone, Copy)]
pub(crate) struct View {
    pub rows: usize,
    pub cols: usize,
    pub row_stride: isize,
    pub col_stride: isize,
}

impl View {
    pub fn row_major(rows: usize, cols: usize) -> Self {
        View {
            rows,
            cols,
            row_stride: cols as isize,
            col_stride: 1,
        }
    }

    pub fn t(self) -> Self {
        View {
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn max_offset(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        ((self.rows - 1) as isize * self.row_stride + (self.cols - 1) as isize * self.col_stride)
            as usize
    }
}

/// `c = alpha * a * b + beta * c`.
pub(crate) fn gemm(
    alpha: f64,
    a: &[f64],
    av: View,
    b: &[f64],
    bv: View,
    beta: f64,
    c: &mut [f64],
    cv: View,
) {
    assert_eq!(av.cols, bv.rows, "inner dimensions");
    assert_eq!(av.rows, cv.rows, "output rows");
    assert_eq!(bv.cols, cv.cols, "output cols");
    if cv.rows == 0 || cv.cols == 0 {
        return;
    }
    assert!(av.max_offset() < a.len().max(1));
    assert!(bv.max_offset() < b.len().max(1));
    assert!(cv.max_offset() < c.len());
    // SAFETY: every index reachable through the views was bounds-checked above.
    unsafe {
        matrixmultiply::dgemm(
            av.rows,
            av.cols,
            bv.cols,
            alpha,
            a.as_ptr(),
            av.row_stride,
            av.col_stride,
            b.as_ptr(),
            bv.row_stride,
            bv.col_stride,
            beta,
            c.as_mut_ptr(),
            cv.row_stride,
            cv.col_stride,
        );
    }
}
