use mlang_hostproto::codec::{decode, encode, Handles};
use mlang_hostproto::Session;
use mlang_interp::{Interpreter, RunConfig, SharedBuffer, Value};
use mlang_model::Store;
use mlang_tensor::Tensor;
use proptest::prelude::*;
use serde_json::Value as Json;

fn session() -> Session {
    Session::new(Interpreter::new(
        RunConfig {
            store: Store::new("/nonexistent"),
            seed: 0,
        },
        Box::new(SharedBuffer::new()),
    ))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tensors_survive_the_wire(rows in 1usize..4, cols in 1usize..5, seed in any::<u32>()) {
        let data: Vec<f32> = (0..rows * cols)
            .map(|i| ((seed as f32) * 0.37 + i as f32 * 1.31).sin() * 100.0)
            .collect();
        let t = Tensor::new(vec![rows, cols], data).unwrap();
        let mut h = Handles::default();
        let j = encode(&Value::Tensor(t.clone()), &mut h);
        let Ok(Value::Tensor(back)) = decode(&j, &h) else { panic!("not a tensor") };
        prop_assert_eq!(back.shape(), t.shape());
        let bits = |t: &Tensor| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&t));
    }

    #[test]
    fn plain_data_round_trips(xs in proptest::collection::vec(any::<i32>(), 0..8), s in "[a-z]{0,6}") {
        let mut h = Handles::default();
        let v = Value::list(xs.iter().map(|&x| Value::Int(x as i64)).chain([Value::str(&s)]).collect());
        let j = encode(&v, &mut h);
        let back = decode(&j, &h).unwrap();
        prop_assert_eq!(back.equals(&v), Some(true));
    }

    #[test]
    fn any_line_gets_exactly_one_response(line in "\\PC{0,40}") {
        let mut s = session();
        let (resp, done) = s.handle_line(&line);
        let r: Json = serde_json::from_str(&resp).unwrap();
        prop_assert!(r.get("id").is_some());
        prop_assert!(!done || r["ok"] == Json::Bool(true));
        let (resp, _) = s.handle_line(r#"{"id": 1000000, "op": "eval", "args": {"source": "2*3"}}"#);
        prop_assert!(resp.contains("\"value\":6"), "{}", resp);
    }
}
