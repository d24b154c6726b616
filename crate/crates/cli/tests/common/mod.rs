//! Helpers shared by the CLI tests and the acceptance suite.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn multiverse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiverse"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("run multiverse binary")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Synthetic loan data: acceptance depends on the controls, not on `female`,
/// but `black` and `married` are correlated with `female`, so including them
/// moves the `female` coefficient.
pub fn mortgage_csv(rows: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("accept,female,black,married,hispanic,self_employed,credit,ltv,dti,pmi\n");
    for _ in 0..rows {
        let mut b = |p: f64| u8::from(rng.random::<f64>() < p);
        let female = b(0.5);
        let f = f64::from(female);
        let black = b(0.15 + 0.3 * f);
        let married = b(0.7 - 0.35 * f);
        let (hispanic, self_employed, credit, ltv, dti, pmi) = (b(0.15), b(0.1), b(0.8), b(0.3), b(0.4), b(0.05));
        let p = 0.75 - 0.3 * f64::from(black) + 0.15 * f64::from(married) - 0.05 * f64::from(hispanic)
            - 0.05 * f64::from(self_employed)
            + 0.1 * f64::from(credit)
            - 0.1 * f64::from(ltv)
            - 0.1 * f64::from(dti)
            - 0.1 * f64::from(pmi);
        let accept = b(p);
        out += &format!("{accept},{female},{black},{married},{hispanic},{self_employed},{credit},{ltv},{dti},{pmi}\n");
    }
    out
}

/// Copies the mortgage fixture and a generated dataset into `dir`.
pub fn mortgage_project(dir: &Path, rows: usize) -> PathBuf {
    let spec = dir.join("mortgage.sh");
    std::fs::copy(fixture("mortgage/mortgage.sh"), &spec).unwrap();
    std::fs::write(dir.join("mortgage.csv"), mortgage_csv(rows, 2020)).unwrap();
    spec
}

/// A `multiverse serve` child process, killed on drop.
pub struct Server {
    child: Child,
    pub url: String,
}

impl Server {
    pub fn start(out_dir: &Path) -> Result<Server, String> {
        let mut child = Command::new(env!("CARGO_BIN_EXE_multiverse"))
            .args(["serve", out_dir.to_str().unwrap(), "--port", "0"])
            .env("RUST_LOG", "off")
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| e.to_string())?;
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .map_err(|e| e.to_string())?;
        let Some(url) = line.trim().split(" at ").nth(1).map(str::to_owned) else {
            let _ = child.kill();
            let out = child.wait_with_output().map_err(|e| e.to_string())?;
            return Err(format!("server did not start: {}", String::from_utf8_lossy(&out.stderr)));
        };
        Ok(Server { child, url })
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
