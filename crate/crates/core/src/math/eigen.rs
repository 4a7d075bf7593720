use nalgebra::{Matrix3, SymmetricEigen, Vector3};

/// Eigen-decomposition of a symmetric 3×3 matrix with eigenvalues in
/// ascending order and each eigenvector's largest-magnitude component
/// positive.
#[derive(Clone, Copy, Debug)]
pub struct SortedEigen3 {
    pub values: Vector3<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: Matrix3<f64>,
}

impl SortedEigen3 {
    pub fn vector(&self, i: usize) -> Vector3<f64> {
        self.vectors.column(i).into_owned()
    }
}

pub fn sorted_symmetric_eigen(m: &Matrix3<f64>) -> SortedEigen3 {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vector3::zeros();
    let mut vectors = Matrix3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut v = eig.eigenvectors.column(src).into_owned();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v = -v;
        }
        vectors.set_column(dst, &v);
    }
    SortedEigen3 { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sorts_and_fixes_sign() {
        let m = Matrix3::from_diagonal(&Vector3::new(3.0, -1.0, 2.0));
        let e = sorted_symmetric_eigen(&m);
        assert_eq!(e.values, Vector3::new(-1.0, 2.0, 3.0));
        assert_relative_eq!(e.vector(0), Vector3::y(), epsilon = 1e-12);
        assert_relative_eq!(e.vector(2), Vector3::x(), epsilon = 1e-12);
    }

    #[test]
    fn reconstructs_input() {
        let a = Matrix3::new(1.0, 0.2, -0.4, 0.3, 2.0, 0.1, 0.0, 0.5, -1.0);
        let m = a * a.transpose();
        let e = sorted_symmetric_eigen(&m);
        let r = e.vectors * Matrix3::from_diagonal(&e.values) * e.vectors.transpose();
        assert_relative_eq!(r, m, epsilon = 1e-10);
        for i in 0..3 {
            let v = e.vector(i);
            assert!(v[v.iamax()] > 0.0);
        }
    }
}
