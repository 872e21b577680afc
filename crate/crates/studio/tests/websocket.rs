mod common;

use std::time::Duration;

use common::obj_text;
use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use stylize_core::mesh::{parse_obj, shapes};
use stylize_studio::Frame;
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Client = WebSocketStream<MaybeTlsStream<tokio::net::TcpStream>>;

async fn server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(stylize_studio::serve(listener));
    format!("ws://{addr}")
}

async fn send(ws: &mut Client, v: Value) {
    ws.send(Message::text(v.to_string())).await.unwrap();
}

enum Incoming {
    Text(Value),
    Frame(Frame),
}

async fn recv(ws: &mut Client) -> Incoming {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(30), ws.next())
            .await
            .unwrap_or_else(|_| panic!("server went quiet"))
            .expect("socket closed")
            .unwrap();
        match msg {
            Message::Text(t) => return Incoming::Text(serde_json::from_str(t.as_str()).unwrap()),
            Message::Binary(b) => return Incoming::Frame(Frame::decode(&b).unwrap()),
            _ => continue,
        }
    }
}

async fn next_frame(ws: &mut Client) -> Frame {
    loop {
        if let Incoming::Frame(f) = recv(ws).await {
            return f;
        }
    }
}

/// Next text reply; frames that arrive first are collected.
async fn reply(ws: &mut Client, frames: &mut Vec<Frame>) -> Value {
    loop {
        match recv(ws).await {
            Incoming::Text(v) => return v,
            Incoming::Frame(f) => frames.push(f),
        }
    }
}

/// load → set_style → set_params → start → 10 frames → pause → export. Returns the text
/// replies with session ids blanked and the first ten frames.
async fn transcript(url: &str) -> (Vec<Value>, Vec<Frame>, String) {
    let mesh = shapes::icosphere(3);
    let (mut ws, _) = connect_async(url).await.unwrap();
    let mut replies = Vec::new();
    let mut frames = Vec::new();

    send(&mut ws, json!({"type": "load_mesh", "obj": obj_text(&mesh)})).await;
    let mut created = reply(&mut ws, &mut frames).await;
    assert_eq!(created["type"], "session_created");
    assert_eq!(created["vertices"], mesh.vertex_count());
    assert_eq!(created["faces"], mesh.face_count());
    created["session"] = Value::Null;
    replies.push(created);

    send(&mut ws, json!({"type": "set_style", "style": "cube"})).await;
    replies.push(reply(&mut ws, &mut frames).await);
    send(
        &mut ws,
        json!({"type": "set_params", "lambda": 4.0, "tolerance": 1e-12, "max_iterations": 10}),
    )
    .await;
    replies.push(reply(&mut ws, &mut frames).await);
    send(&mut ws, json!({"type": "start"})).await;
    replies.push(reply(&mut ws, &mut frames).await);
    while frames.len() < 10 {
        match recv(&mut ws).await {
            Incoming::Frame(f) => frames.push(f),
            Incoming::Text(v) => panic!("unexpected {v}"),
        }
    }
    send(&mut ws, json!({"type": "pause"})).await;
    replies.push(reply(&mut ws, &mut frames).await);
    send(&mut ws, json!({"type": "export"})).await;
    let exported = reply(&mut ws, &mut frames).await;
    assert_eq!(exported["type"], "exported");
    let obj = exported["obj"].as_str().unwrap().to_string();
    ws.close(None).await.unwrap();

    for f in &frames {
        assert_eq!(f.vertex_count(), mesh.vertex_count());
        assert!(f.positions.iter().all(|x| x.is_finite()));
    }
    for w in frames.windows(2) {
        assert!(w[1].iteration > w[0].iteration);
    }
    frames.truncate(10);
    (replies, frames, obj)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn recorded_transcript_replays_identically() {
    let url = server().await;
    let (r1, f1, obj) = transcript(&url).await;
    let (r2, f2, _) = transcript(&url).await;
    assert_eq!(
        r1.iter().map(|v| v["type"].as_str().unwrap()).collect::<Vec<_>>(),
        ["session_created", "ack", "ack", "ack", "ack"]
    );
    assert_eq!(r1, r2);
    // The solver is deterministic, so the binary frames match bit for bit.
    let bytes = |f: &[Frame]| f.iter().map(Frame::encode).collect::<Vec<_>>();
    assert_eq!(bytes(&f1), bytes(&f2));
    assert_eq!(f1[0].iteration, 1);
    let exported = parse_obj(&obj, "export").unwrap();
    assert_eq!(exported.vertex_count(), shapes::icosphere(3).vertex_count());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn protocol_errors_over_the_socket() {
    let url = server().await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    let mut frames = Vec::new();
    send(&mut ws, json!({"type": "start"})).await;
    assert_eq!(reply(&mut ws, &mut frames).await["code"], "NO_SESSION");
    send(&mut ws, json!({"type": "teleport"})).await;
    assert_eq!(reply(&mut ws, &mut frames).await["code"], "BAD_PARAMS");
    ws.send(Message::binary(vec![1u8, 2, 3])).await.unwrap();
    assert_eq!(reply(&mut ws, &mut frames).await["code"], "BAD_PARAMS");
    send(&mut ws, json!({"type": "load_mesh", "obj": "f 1 2 3\n"})).await;
    assert_eq!(reply(&mut ws, &mut frames).await["code"], "BAD_MESH");
    send(&mut ws, json!({"type": "load_mesh", "obj": obj_text(&shapes::icosahedron())})).await;
    assert_eq!(reply(&mut ws, &mut frames).await["type"], "session_created");
    send(&mut ws, json!({"type": "set_style", "style": "mesh"})).await;
    assert_eq!(reply(&mut ws, &mut frames).await["code"], "BAD_STYLE");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_sockets_get_their_own_sessions() {
    let url = server().await;
    let (mut a, _) = connect_async(&url).await.unwrap();
    let (mut b, _) = connect_async(&url).await.unwrap();
    let mut frames = Vec::new();
    send(&mut a, json!({"type": "load_mesh", "obj": obj_text(&shapes::icosphere(1))})).await;
    send(&mut b, json!({"type": "load_mesh", "obj": obj_text(&shapes::icosphere(2))})).await;
    let ra = reply(&mut a, &mut frames).await;
    let rb = reply(&mut b, &mut frames).await;
    assert_ne!(ra["session"], rb["session"]);
    for ws in [&mut a, &mut b] {
        send(ws, json!({"type": "set_style", "style": "icosahedron"})).await;
        reply(ws, &mut frames).await;
        send(ws, json!({"type": "start"})).await;
        reply(ws, &mut frames).await;
    }
    assert_eq!(next_frame(&mut a).await.vertex_count(), 42);
    assert_eq!(next_frame(&mut b).await.vertex_count(), 162);
}
