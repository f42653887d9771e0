// debug scratch: full manual regularize loop with diagnostics
use formrep_core::matrix::{cr, direct_sum, jordan_block, max_abs, null_space, singular_values, CMatrix};

fn rank8(sv: &[f64]) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 { return 0; }
    sv.iter().filter(|&&x| x > 1e-8 * smax).count()
}

fn main() {
    let m0 = direct_sum(
        &direct_sum(&jordan_block(3, cr(0.0)), &CMatrix::zeros(1, 1)),
        &CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(2.0), cr(0.0)]),
    );
    let s = formrep_core::random_invertible(6, 30.0, 77);
    let mut current = s.transpose() * &m0 * &s;
    let mut level = 1;
    loop {
        let n = current.nrows();
        if n == 0 { println!("done: empty regular"); break; }
        let sv = singular_values(&current);
        let r = rank8(&sv);
        println!("level {level}: n={n} r={r} sigmas {:?}", sv.iter().map(|x| format!("{:.2e}", x)).collect::<Vec<_>>());
        if r == n { println!("done: regular {n}x{n}"); break; }
        let svd = current.clone().svd(true, true);
        let v = svd.v_t.clone().unwrap().adjoint();
        let m1 = v.transpose() * &current * &v;
        let c_block = m1.view((r, 0), (n - r, r)).into_owned();
        let csv = singular_values(&c_block);
        let d = rank8(&csv);
        let p = n - r - d;
        println!("  d={d} p={p} | C sigmas {:?}", csv.iter().map(|x| format!("{:.2e}", x)).collect::<Vec<_>>());
        if d == 0 {
            current = m1.view((0, 0), (r, r)).into_owned();
            level += 1;
            continue;
        }
        // row-compress C
        let c_svd = c_block.clone().svd(true, true);
        let u_thin = c_svd.u.clone().unwrap();
        println!("  u_thin shape {}x{}", u_thin.nrows(), u_thin.ncols());
        // complete to square
        let mut cols: Vec<_> = (0..u_thin.ncols()).map(|j| u_thin.column(j).into_owned()).collect();
        let mut seedv = 1.0f64;
        while cols.len() < n - r {
            let mut w = nalgebra::DVector::from_fn(n - r, |i, _| nalgebra::Complex::new((seedv * (i as f64 + 1.3)).sin(), (seedv * (i as f64 + 0.7)).cos()));
            seedv += 1.0;
            for c in &cols { let co = c.dotc(&w); w -= c * co; }
            let nm = w.norm();
            if nm > 1e-8 { w /= nalgebra::Complex::new(nm, 0.0); cols.push(w); }
        }
        let u_c = CMatrix::from_columns(&cols);
        let t = u_c.map(|z| z.conj());
        let mut s2 = CMatrix::identity(n, n);
        s2.view_mut((r, r), (n - r, n - r)).copy_from(&t);
        let m2 = s2.transpose() * &m1 * &s2;
        let c1 = m2.view((r, 0), (d, r)).into_owned();
        println!("  c1 residual rows below d: {:.2e}", max_abs(&m2.view((r + d, 0), (p, r)).into_owned()));
        // column-reduce C1 -> [0 | I]
        let ns = null_space(&c1, 1e-8);
        println!("  null(c1) cols = {} (want {})", ns.ncols(), r - d);
        let c1_adj = c1.adjoint();
        let gram = &c1 * &c1_adj;
        let pinv = gram.clone().lu().solve(&CMatrix::identity(d, d)).unwrap();
        let p_cols = &c1_adj * pinv;
        let mut g = CMatrix::zeros(r, r);
        g.view_mut((0, 0), (r, r - d)).copy_from(&ns);
        g.view_mut((0, r - d), (r, d)).copy_from(&p_cols);
        let mut s3 = CMatrix::identity(n, n);
        s3.view_mut((0, 0), (r, r)).copy_from(&g);
        let m3 = s3.transpose() * &m2 * &s3;
        println!("  after G: c1' = [0|I]? zero part {:.2e}, id part err {:.2e}",
            max_abs(&m3.view((r, 0), (d, r - d)).into_owned()),
            max_abs(&(m3.view((r, r - d), (d, d)).into_owned() - CMatrix::identity(d, d))));
        let b12 = m3.view((0, r - d), (r - d, d)).into_owned();
        let b22 = m3.view((r - d, r - d), (d, d)).into_owned();
        let mut s4 = CMatrix::identity(n, n);
        s4.view_mut((r, 0), (d, r - d)).copy_from(&(-b12.transpose()));
        s4.view_mut((r, r - d), (d, d)).copy_from(&(-b22.transpose()));
        let m4 = s4.transpose() * &m3 * &s4;
        println!("  after kill: B12 {:.2e} B22 {:.2e} | row3 [0 I]? {:.2e} {:.2e}",
            max_abs(&m4.view((0, r - d), (r - d, d)).into_owned()),
            max_abs(&m4.view((r - d, r - d), (d, d)).into_owned()),
            max_abs(&m4.view((r, 0), (d, r - d)).into_owned()),
            max_abs(&(m4.view((r, r - d), (d, d)).into_owned() - CMatrix::identity(d, d))));
        current = m4.view((0, 0), (r, r)).into_owned();
        level += 1;
    }
}
